#include "tnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace tnn {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'N', 'N', 'C', 'K', 'P', 'T', '1'};

template <class U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> b;
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

template <class U>
U get_le(std::istream& is, const std::string& what) {
  std::array<unsigned char, sizeof(U)> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size()))
    throw CheckpointError("checkpoint truncated while reading " + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

nlohmann::json arch_to_json(const NetworkArch& a) {
  return {{"rank", a.rank}, {"depth", a.depth}, {"width", a.width}, {"activation", to_string(a.activation)}};
}

NetworkArch arch_from_json(const nlohmann::json& j) {
  NetworkArch a;
  a.rank = j.at("rank").get<std::size_t>();
  a.depth = j.at("depth").get<std::size_t>();
  a.width = j.at("width").get<std::size_t>();
  a.activation = activation_from_string(j.at("activation").get<std::string>());
  return a;
}

}  // namespace

nlohmann::json dims_to_json(const std::vector<DimensionSpec>& dims) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : dims)
    out.push_back({{"kind", to_string(d.kind)}, {"a", d.a}, {"b", d.b}, {"M", d.subintervals}, {"N", d.points}});
  return out;
}

std::vector<DimensionSpec> dims_from_json(const nlohmann::json& j) {
  std::vector<DimensionSpec> out;
  for (const auto& e : j) {
    DimensionSpec d;
    d.kind = dimension_kind_from_string(e.at("kind").get<std::string>());
    d.a = e.value("a", 0.0);
    d.b = e.value("b", 1.0);
    d.subintervals = e.value("M", 1);
    d.points = e.at("N").get<int>();
    d.validate();
    out.push_back(d);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const TnnModel& model,
                     const nlohmann::json& extra) {
  const std::vector<double> flat = flatten_params(model);
  nlohmann::json header;
  header["format"] = "tnn-checkpoint";
  header["version"] = kCheckpointVersion;
  header["dims"] = dims_to_json(model.dims);
  header["networks"] = nlohmann::json::array();
  for (const auto& n : model.nets) header["networks"].push_back(arch_to_json(n.arch));
  header["seed"] = model.seed;
  header["parameter_count"] = flat.size();
  header["extra"] = extra;
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, kCheckpointVersion);
    put_le<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    put_le<std::uint64_t>(os, flat.size());
    for (double v : flat) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    os.flush();
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic;
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw CheckpointError(path.string() + " is not a TNN checkpoint");
  const auto version = get_le<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto hlen = get_le<std::uint64_t>(is, "header length");
  if (hlen > (std::uint64_t{1} << 30)) throw CheckpointError("checkpoint header length is implausible");
  std::string text(hlen, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(hlen)))
    throw CheckpointError("checkpoint truncated in header");

  Checkpoint ck;
  std::vector<NetworkArch> archs;
  std::size_t declared = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<std::uint32_t>() != version)
      throw CheckpointError("checkpoint header version disagrees with the preamble");
    for (const auto& a : header.at("networks")) archs.push_back(arch_from_json(a));
    ck.model = make_model(dims_from_json(header.at("dims")), archs, header.at("seed").get<std::uint64_t>());
    declared = header.at("parameter_count").get<std::size_t>();
    ck.extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint header: ") + e.what());
  }

  const auto count = get_le<std::uint64_t>(is, "parameter count");
  const std::size_t expected = param_layout(ck.model).total;
  if (count != declared || count != expected)
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " parameters, header declares " +
                          std::to_string(declared) + ", architecture needs " + std::to_string(expected));
  std::vector<double> flat(count);
  for (auto& v : flat) v = std::bit_cast<double>(get_le<std::uint64_t>(is, "parameters"));
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint data");
  unflatten_params(ck.model, flat);
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const TnnModel& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.model.dims != expected.dims)
    throw CheckpointError("checkpoint dimension specs do not match the configured problem");
  if (ck.model.k() != expected.k())
    throw CheckpointError("checkpoint has " + std::to_string(ck.model.k()) + " networks, expected " +
                          std::to_string(expected.k()));
  for (std::size_t l = 0; l < expected.k(); ++l)
    if (!(ck.model.nets[l].arch == expected.nets[l].arch))
      throw CheckpointError("checkpoint architecture of network " + std::to_string(l) + " differs");
  return ck;
}

}  // namespace tnn
