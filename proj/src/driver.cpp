#include "tnn/driver.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tnn/assembly.hpp"
#include "tnn/checkpoint.hpp"
#include "tnn/densela.hpp"
#include "tnn/loss.hpp"
#include "tnn/metrics.hpp"
#include "tnn/optim.hpp"

namespace tnn {

using nlohmann::json;

TrainingError::TrainingError(const std::string& phase_, std::size_t step_, const std::string& what)
    : std::runtime_error(phase_ + " step " + std::to_string(step_) + ": " + what), phase(phase_), step(step_) {}

namespace {

const std::set<std::string> kPresets{"ho2d", "ho2d-coupled", "ho5d-coupled", "hydrogen", "box-laplace"};

json arch_json(const NetworkArch& a) {
  return {{"rank", a.rank}, {"depth", a.depth}, {"width", a.width}, {"activation", to_string(a.activation)}};
}

NetworkArch arch_from(const json& j, NetworkArch base) {
  for (const auto& [key, v] : j.items()) {
    if (key == "rank") base.rank = v.get<std::size_t>();
    else if (key == "depth") base.depth = v.get<std::size_t>();
    else if (key == "width") base.width = v.get<std::size_t>();
    else if (key == "activation") base.activation = activation_from_string(v.get<std::string>());
    else throw ConfigError("unknown network key '" + key + "'");
  }
  return base;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, v] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// shortest round-trip digits cut (not rounded) to 15 decimals, the way the
// reference tables print energies
std::string fixed15(double v) {
  if (!std::isfinite(v)) return std::to_string(v);
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  std::string s(buf.data(), res.ptr);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += '.';
    dot = s.size() - 1;
  }
  s.resize(std::min(s.size(), dot + 16));
  s.append(dot + 16 - s.size(), '0');
  return s;
}

}  // namespace

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  c.problem = name;
  if (name == "ho2d" || name == "ho2d-coupled") {
    c.k = 16;
    c.network = {10, 3, 20, Activation::Sin};
    c.adam_lr = 1e-3;
    c.adam_steps = 20000;
    c.lbfgs_steps = 500;
  } else if (name == "ho5d-coupled") {
    c.k = 4;
    c.network = {20, 3, 40, Activation::Sin};
    c.adam_lr = 1e-3;
    c.adam_steps = 10000;
    c.lbfgs_steps = 0;
  } else if (name == "hydrogen") {
    c.k = 1;
    c.network = {10, 3, 20, Activation::Sin};
    c.adam_lr = 3e-4;
    c.adam_steps = 20000;
    c.lbfgs_steps = 0;
  } else if (name == "box-laplace") {
    c.k = 4;
    c.network = {10, 3, 20, Activation::Sin};
    c.adam_lr = 3e-3;
    c.adam_steps = 5000;
    c.lbfgs_steps = 200;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

RunConfig RunConfig::from_json(const json& j, RunConfig c) {
  try {
    check_keys(j,
               {"schema_version", "problem", "matrix", "box_dims", "k", "network", "networks", "dims",
                "beta_init", "adam", "lbfgs", "seed", "log_every", "checkpoint_every", "output", "resume"},
               "config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion)
      throw ConfigError("unsupported config schema_version " + j.at("schema_version").dump());
    if (j.contains("problem")) {
      const auto name = j.at("problem").get<std::string>();
      // a preset supplies its own defaults; explicit fields below still win
      if (kPresets.count(name)) c = preset(name);
      c.problem = name;
    }
    if (j.contains("matrix")) c.matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (j.contains("box_dims")) c.box_dims = j.at("box_dims").get<int>();
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("network")) c.network = arch_from(j.at("network"), c.network);
    if (j.contains("networks")) {
      c.networks.clear();
      for (const auto& a : j.at("networks")) c.networks.push_back(arch_from(a, c.network));
    }
    if (j.contains("dims")) c.dims = dims_from_json(j.at("dims"));
    if (j.contains("beta_init")) c.beta_init = j.at("beta_init").get<double>();
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      check_keys(a, {"lr", "steps"}, "adam");
      c.adam_lr = a.value("lr", c.adam_lr);
      c.adam_steps = a.value("steps", c.adam_steps);
    }
    if (j.contains("lbfgs")) {
      const auto& l = j.at("lbfgs");
      check_keys(l, {"steps", "history"}, "lbfgs");
      c.lbfgs_steps = l.value("steps", c.lbfgs_steps);
      c.lbfgs_history = l.value("history", c.lbfgs_history);
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("log_every")) c.log_every = j.at("log_every").get<std::size_t>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
    if (j.contains("output")) {
      const auto& o = j.at("output");
      check_keys(o, {"results", "table", "checkpoint"}, "output");
      c.results_path = o.value("results", c.results_path);
      c.table_path = o.value("table", c.table_path);
      c.checkpoint_path = o.value("checkpoint", c.checkpoint_path);
    }
    if (j.contains("resume")) c.resume_path = j.at("resume").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["problem"] = problem;
  if (!matrix.empty()) j["matrix"] = matrix;
  if (problem == "box-laplace") j["box_dims"] = box_dims;
  j["k"] = k;
  j["network"] = arch_json(network);
  if (!networks.empty()) {
    j["networks"] = json::array();
    for (const auto& a : networks) j["networks"].push_back(arch_json(a));
  }
  if (!dims.empty()) j["dims"] = dims_to_json(dims);
  j["beta_init"] = beta_init;
  j["adam"] = {{"lr", adam_lr}, {"steps", adam_steps}};
  j["lbfgs"] = {{"steps", lbfgs_steps}, {"history", lbfgs_history}};
  j["seed"] = seed;
  j["log_every"] = log_every;
  j["checkpoint_every"] = checkpoint_every;
  j["output"] = {{"results", results_path}, {"table", table_path}, {"checkpoint", checkpoint_path}};
  if (!resume_path.empty()) j["resume"] = resume_path;
  return j;
}

void RunConfig::validate() const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!networks.empty() && networks.size() != k)
    throw ConfigError("networks lists " + std::to_string(networks.size()) + " architectures for k = " +
                      std::to_string(k));
  auto check_arch = [](const NetworkArch& a) {
    if (a.rank < 1) throw ConfigError("rank p must be at least 1");
    if (a.width < 1) throw ConfigError("width must be at least 1");
  };
  check_arch(network);
  for (const auto& a : networks) check_arch(a);
  if (!(adam_lr > 0.0)) throw ConfigError("adam lr must be positive");
  if (!(beta_init > 0.0)) throw ConfigError("beta_init must be positive");
  if (lbfgs_history < 1) throw ConfigError("lbfgs history must be at least 1");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
  if (problem == "oscillator" && matrix.empty()) throw ConfigError("problem 'oscillator' needs a matrix");
  if (problem != "oscillator" && !kPresets.count(problem)) throw ConfigError("unknown problem '" + problem + "'");
  if (problem == "box-laplace" && box_dims < 1) throw ConfigError("box_dims must be at least 1");
}

Problem build_problem(const RunConfig& cfg) {
  Problem p;
  try {
    if (cfg.problem == "ho2d") {
      p = oscillator_problem("ho2d", Matrix::identity(2), cfg.k, 40);
    } else if (cfg.problem == "ho2d-coupled") {
      p = oscillator_problem("ho2d-coupled", coupled_oscillator_2d(), cfg.k, 40);
    } else if (cfg.problem == "ho5d-coupled") {
      p = oscillator_problem("ho5d-coupled", coupled_oscillator_5d(), cfg.k, 40);
    } else if (cfg.problem == "hydrogen") {
      p = hydrogen_problem(cfg.k);
    } else if (cfg.problem == "box-laplace") {
      p = box_laplace_problem(static_cast<std::size_t>(cfg.box_dims), cfg.k, 4, 16);
    } else if (cfg.problem == "oscillator") {
      const std::size_t d = cfg.matrix.size();
      Matrix a(d, d);
      for (std::size_t i = 0; i < d; ++i) {
        if (cfg.matrix[i].size() != d) throw ConfigError("oscillator matrix must be square");
        for (std::size_t j = 0; j < d; ++j) a(i, j) = cfg.matrix[i][j];
      }
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (a(i, j) != a(j, i)) throw ConfigError("oscillator matrix must be symmetric");
      p = oscillator_problem("oscillator", a, cfg.k, 40);
    } else {
      throw ConfigError("unknown problem '" + cfg.problem + "'");
    }
  } catch (const NotPositiveDefinite&) {
    throw ConfigError("oscillator matrix must be positive definite");
  }
  if (!cfg.dims.empty()) {
    if (cfg.dims.size() != p.dims.size())
      throw ConfigError("config gives " + std::to_string(cfg.dims.size()) + " dimensions, problem '" +
                        cfg.problem + "' has " + std::to_string(p.dims.size()));
    for (std::size_t i = 0; i < p.dims.size(); ++i)
      if (cfg.dims[i].kind != p.dims[i].kind)
        throw ConfigError("dimension " + std::to_string(i) + " must be " + to_string(p.dims[i].kind));
    p.dims = cfg.dims;
  }
  return p;
}

TrainReport evaluate_model(const RunConfig& cfg, const Problem& problem, const TnnModel& model) {
  TrainReport r;
  r.config = cfg.to_json();
  const Assembler post(problem.dims, {problem.forms.a, problem.forms.b, problem.gradient}, 1);
  const auto st = post.forward(model);
  r.a = st.matrices[0];
  r.b = st.matrices[1];
  const auto eig = sym_generalized_eig(r.a, r.b);
  r.ritz_values = eig.values;
  r.ritz_vectors = eig.vectors;
  r.final_loss = trace_loss({r.a, r.b});

  const std::size_t k = model.k();
  const std::size_t known = std::min(k, problem.exact.size());
  std::vector<std::optional<ProjectionErrors>> proj(k);
  if (known > 0 && problem.exact_function) {
    const auto approx = ritz_functions(model, st, eig.vectors);
    const Matrix yt = eig.vectors.transpose();
    const ProjectionGrams grams{yt * r.b * eig.vectors, yt * st.matrices[2] * eig.vectors};
    const MetricSpace space(st.grids, problem.forms.b, problem.gradient);
    std::vector<std::optional<GridFunction>> exact(known);
    std::vector<const GridFunction*> ptrs(known, nullptr);
    std::vector<std::size_t> groups(known);
    for (std::size_t s = 0; s < known; ++s) {
      exact[s] = problem.exact_function(s, st.grids);
      if (exact[s]) ptrs[s] = &*exact[s];
      groups[s] = problem.exact[s].group;
    }
    const auto errs = grouped_projection_errors(space, ptrs, groups, approx, &grams);
    for (std::size_t s = 0; s < known; ++s) proj[s] = errs[s];
  }
  std::vector<double> exact_e;
  for (std::size_t s = 0; s < known; ++s) exact_e.push_back(problem.exact[s].energy);
  const auto err_e = eigenvalue_errors({r.ritz_values.begin(), r.ritz_values.begin() + known}, exact_e);
  for (std::size_t n = 0; n < k; ++n) {
    ErrorRow row;
    row.n = n;
    row.approx = r.ritz_values[n];
    if (n < known) {
      row.label = problem.exact[n].label;
      row.exact = problem.exact[n].energy;
      row.err_e = err_e[n];
      if (proj[n]) {
        row.err_l2 = proj[n]->l2;
        row.err_h1 = proj[n]->h1;
      }
    }
    r.rows.push_back(row);
  }
  return r;
}

TrainReport run(const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  const Problem problem = build_problem(cfg);
  std::vector<NetworkArch> archs = cfg.networks.empty() ? std::vector<NetworkArch>(cfg.k, cfg.network) : cfg.networks;
  TnnModel model;
  try {
    model = make_model(problem.dims, archs, cfg.seed, cfg.beta_init);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!cfg.resume_path.empty()) {
    try {
      model = load_checkpoint(cfg.resume_path, model).model;
    } catch (const CheckpointError& e) {
      throw ConfigError(std::string("resume: ") + e.what());
    }
  }

  const Assembler train(problem.dims, {problem.forms.a, problem.forms.b}, 1);
  TnnModel work = model;
  double last_jitter = 0.0;
  const Objective objective = [&](std::span<const double> p, std::span<double> g) {
    unflatten_params(work, p);
    const auto st = train.forward(work);
    const auto ev = evaluate_loss({st.matrices[0], st.matrices[1]});
    last_jitter = ev.jitter;
    const auto grad = train.backward(work, st, {ev.adjoints.grad_a, ev.adjoints.grad_b});
    std::copy(grad.begin(), grad.end(), g.begin());
    return ev.value;
  };

  std::vector<LossPoint> trajectory;
  std::vector<JitterEvent> jitter;
  std::vector<double> x = flatten_params(model);
  std::vector<double> g(x.size());

  auto save_partial = [&](const std::vector<double>& params, const std::string& phase, std::size_t step) {
    if (cfg.checkpoint_path.empty()) return;
    TnnModel m = model;
    unflatten_params(m, params);
    save_checkpoint(cfg.checkpoint_path, m, {{"phase", phase}, {"step", step}, {"partial", true}});
  };

  AdamState adam(x.size(), AdamOptions{cfg.adam_lr});
  for (std::size_t step = 0; step < cfg.adam_steps; ++step) {
    double f;
    try {
      f = objective(x, g);
      if (!std::isfinite(f)) throw std::runtime_error("non-finite loss");
      adam_step(adam, x, g);
    } catch (const std::exception& e) {
      save_partial(x, "adam", step);
      throw TrainingError("adam", step, e.what());
    }
    if (last_jitter > 0.0) jitter.push_back({step, last_jitter});
    if (step % cfg.log_every == 0 || step + 1 == cfg.adam_steps) {
      trajectory.push_back({step, f});
      if (progress) progress("adam", step, f);
    }
    if (cfg.checkpoint_every > 0 && step > 0 && step % cfg.checkpoint_every == 0 && !cfg.checkpoint_path.empty()) {
      unflatten_params(work, x);
      save_checkpoint(cfg.checkpoint_path, work, {{"phase", "adam"}, {"step", step}, {"partial", true}});
    }
  }

  std::string status = "skipped";
  std::size_t iterations = 0;
  if (cfg.lbfgs_steps > 0) {
    LbfgsOptions opt;
    opt.history = cfg.lbfgs_history;
    opt.max_iters = cfg.lbfgs_steps;
    const std::size_t base = cfg.adam_steps;
    try {
      const auto res = lbfgs_minimize(objective, x, opt, [&](const LbfgsIteration& it) {
        const std::size_t step = base + it.iteration;
        if (last_jitter > 0.0) jitter.push_back({step, last_jitter});
        trajectory.push_back({step, it.f_new});
        if (progress && (it.iteration % cfg.log_every == 0)) progress("lbfgs", it.iteration, it.f_new);
      });
      x = res.x;
      status = to_string(res.status);
      iterations = res.iterations;
    } catch (const std::exception& e) {
      save_partial(x, "lbfgs", base);
      throw TrainingError("lbfgs", base, e.what());
    }
  }

  unflatten_params(model, x);
  TrainReport r;
  try {
    r = evaluate_model(cfg, problem, model);
  } catch (const std::exception& e) {
    save_partial(x, "post", cfg.adam_steps + iterations);
    throw TrainingError("post-process", cfg.adam_steps + iterations, e.what());
  }
  r.loss = std::move(trajectory);
  r.jitter = std::move(jitter);
  r.lbfgs_status = status;
  r.lbfgs_iterations = iterations;
  if (!cfg.checkpoint_path.empty())
    save_checkpoint(cfg.checkpoint_path, model,
                    {{"phase", "final"}, {"step", cfg.adam_steps + iterations}, {"partial", false}});
  r.started_at = started;
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

json report_json(const TrainReport& r, bool include_timing) {
  json j;
  j["schema"] = "tnn-results";
  j["schema_version"] = kResultsSchemaVersion;
  j["config"] = r.config;
  j["final_loss"] = r.final_loss;
  j["ritz_values"] = r.ritz_values;
  j["states"] = json::array();
  for (const auto& row : r.rows)
    j["states"].push_back({{"n", row.n},
                           {"label", row.label},
                           {"exact", optional_json(row.exact)},
                           {"approx", row.approx},
                           {"err_E", optional_json(row.err_e)},
                           {"err_L2", optional_json(row.err_l2)},
                           {"err_H1", optional_json(row.err_h1)}});
  j["lbfgs"] = {{"status", r.lbfgs_status}, {"iterations", r.lbfgs_iterations}};
  j["loss_trajectory"] = json::array();
  for (const auto& p : r.loss) j["loss_trajectory"].push_back({p.step, p.value});
  j["jitter_events"] = json::array();
  for (const auto& e : r.jitter) j["jitter_events"].push_back({{"step", e.step}, {"delta", e.delta}});
  j["matrices"] = {{"A", matrix_json(r.a)}, {"B", matrix_json(r.b)}};
  j["ritz_vectors"] = matrix_json(r.ritz_vectors);
  if (include_timing) j["timing"] = {{"started_at", r.started_at}, {"wall_seconds", r.wall_seconds}};
  return j;
}

void write_table(std::ostream& os, const TrainReport& r) {
  const char* dash = "—";
  auto sci = [&](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::scientific << std::setprecision(3) << *v;
    else s << dash;
    return s.str();
  };
  auto fixed = [&](const std::optional<double>& v) -> std::string {
    if (!v) return dash;
    return fixed15(*v);
  };
  auto pad = [](const std::string& s, std::size_t w) {
    // count code points so the dash placeholder aligns
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return s + std::string(w > n ? w - n : 1, ' ');
  };
  os << pad("n", 5) << pad("state", 20) << pad("exact E_n", 22) << pad("approx E_n", 22) << pad("err_E", 12)
     << pad("err_L2", 12) << "err_H1\n";
  for (const auto& row : r.rows)
    os << pad(std::to_string(row.n), 5) << pad(row.label.empty() ? dash : row.label, 20) << pad(fixed(row.exact), 22)
       << pad(fixed(row.approx), 22) << pad(sci(row.err_e), 12) << pad(sci(row.err_l2), 12) << sci(row.err_h1)
       << "\n";
}

void report_emit(const TrainReport& r, const RunConfig& cfg) {
  if (!cfg.results_path.empty()) {
    std::ofstream os(cfg.results_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write results file " + cfg.results_path);
    os << report_json(r).dump(2) << "\n";
    if (!os) throw std::runtime_error("write failed for " + cfg.results_path);
  }
  if (!cfg.table_path.empty()) {
    std::ofstream os(cfg.table_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write table file " + cfg.table_path);
    write_table(os, r);
    if (!os) throw std::runtime_error("write failed for " + cfg.table_path);
  }
}

}  // namespace tnn
