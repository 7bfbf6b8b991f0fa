#include "pmtg/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmtg/errors.hpp"

namespace pmtg {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "pmtg-policy";
constexpr int kVersion = 1;

void put_le(std::string& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw CorruptHeaderError("checkpoint header: malformed interval");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::uint64_t parse_hex(const std::string& s) {
  if (s.empty() || s.size() > 16) throw CorruptHeaderError("checkpoint header: malformed config_hash");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw CorruptHeaderError("checkpoint header: malformed config_hash");
  }
  return v;
}

}  // namespace

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const PolicyShape& s = ckpt.params.shape;
  if (ckpt.params.flat.size() != param_count(s)) throw ConfigError("checkpoint params do not match their shape");
  json h;
  h["format"] = kFormat;
  h["version"] = kVersion;
  h["kind"] = std::string(to_string(s.kind));
  h["input_dim"] = s.input_dim;
  h["output_dim"] = s.output_dim;
  h["hidden"] = s.hidden;
  h["bias"] = s.bias;
  h["param_count"] = ckpt.params.flat.size();
  h["bounds"] = {{"frequency", interval_json(ckpt.bounds.frequency)},
                 {"amplitude", interval_json(ckpt.bounds.amplitude)},
                 {"height", interval_json(ckpt.bounds.height)},
                 {"correction", ckpt.bounds.correction}};
  h["seed"] = ckpt.seed;
  h["config_hash"] = hash_hex(ckpt.config_hash);
  h["iteration"] = ckpt.iteration;
  h["total_rollouts"] = ckpt.total_rollouts;
  h["normalizer"] = {{"count", ckpt.normalizer.count()},
                     {"mean", ckpt.normalizer.mean()},
                     {"m2", ckpt.normalizer.m2()}};

  std::string bytes = h.dump();
  bytes.push_back('\n');
  for (double v : ckpt.params.flat) put_le(bytes, v);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw CorruptHeaderError("checkpoint " + path.string() + ": no header line");

  const json h = json::parse(bytes.substr(0, nl), nullptr, false);
  if (h.is_discarded() || !h.is_object()) {
    throw CorruptHeaderError("checkpoint " + path.string() + ": header is not valid JSON");
  }
  Checkpoint ckpt;
  try {
    if (h.at("format").get<std::string>() != kFormat || h.at("version").get<int>() != kVersion) {
      throw CorruptHeaderError("checkpoint " + path.string() + ": unknown format or version");
    }
    PolicyShape s;
    s.kind = parse_policy_kind(h.at("kind").get<std::string>());
    s.input_dim = h.at("input_dim").get<std::size_t>();
    s.output_dim = h.at("output_dim").get<std::size_t>();
    s.hidden = h.at("hidden").get<std::vector<std::size_t>>();
    s.bias = h.at("bias").get<bool>();
    s.validate();
    const json& b = h.at("bounds");
    ckpt.bounds.frequency = interval_from(b.at("frequency"));
    ckpt.bounds.amplitude = interval_from(b.at("amplitude"));
    ckpt.bounds.height = interval_from(b.at("height"));
    ckpt.bounds.correction = b.at("correction").get<double>();
    ckpt.seed = h.at("seed").get<std::uint64_t>();
    ckpt.config_hash = parse_hex(h.at("config_hash").get<std::string>());
    ckpt.iteration = h.at("iteration").get<std::size_t>();
    ckpt.total_rollouts = h.at("total_rollouts").get<std::size_t>();
    const json& n = h.at("normalizer");
    ckpt.normalizer = RunningNormalizer(n.at("count").get<std::size_t>(), n.at("mean").get<std::vector<double>>(),
                                        n.at("m2").get<std::vector<double>>());
    const std::size_t declared = h.at("param_count").get<std::size_t>();
    if (declared != param_count(s)) {
      throw CorruptHeaderError("checkpoint " + path.string() + ": param_count disagrees with the shape");
    }
    ckpt.params.shape = s;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptHeaderError("checkpoint " + path.string() + ": bad header (" + e.what() + ")");
  }

  const std::size_t expected = param_count(ckpt.params.shape);
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload != expected * 8) {
    throw LengthMismatchError("checkpoint " + path.string() + ": expected " + std::to_string(expected * 8) +
                              " parameter bytes, found " + std::to_string(payload));
  }
  ckpt.params.flat.resize(expected);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  for (std::size_t i = 0; i < expected; ++i) ckpt.params.flat[i] = get_le(p + 8 * i);

  if (options.expected_shape && !(*options.expected_shape == ckpt.params.shape)) {
    throw ShapeMismatchError("checkpoint policy " + ckpt.params.shape.describe() + " does not match config policy " +
                             options.expected_shape->describe());
  }
  if (options.expected_hash && *options.expected_hash != ckpt.config_hash) {
    const std::string msg = "checkpoint config hash " + hash_hex(ckpt.config_hash) + " differs from config hash " +
                            hash_hex(*options.expected_hash);
    if (!options.force) throw HashMismatchError(msg);
    if (options.warn) options.warn("warning: " + msg + " (forced)");
  }
  return ckpt;
}

}  // namespace pmtg
