#include "training/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "numcore/errors.hpp"

namespace gwsm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError("config: bad number for '" + std::string(key) + "': '" + std::string(value) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("config: bad integer for '" + std::string(key) + "': '" + std::string(value) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw DataError("config: bad boolean for '" + std::string(key) + "': '" + std::string(value) + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "K") K = parse_uint(key, value);
  else if (key == "T") T = parse_uint(key, value);
  else if (key == "delta_r") delta_r = parse_double(key, value);
  else if (key == "delta_d") delta_d = parse_double(key, value);
  else if (key == "lambda") lambda = parse_double(key, value);
  else if (key == "d") d = parse_uint(key, value);
  else if (key == "epochs") epochs = parse_uint(key, value);
  else if (key == "lr_backbone") lr_backbone = parse_double(key, value);
  else if (key == "lr_gnn") lr_gnn = parse_double(key, value);
  else if (key == "lr_decay_factor") lr_decay_factor = parse_double(key, value);
  else if (key == "lr_decay_every") lr_decay_every = parse_uint(key, value);
  else if (key == "momentum") momentum = parse_double(key, value);
  else if (key == "weight_decay") weight_decay = parse_double(key, value);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "channels") channels = parse_uint(key, value);
  else if (key == "num_classes") num_classes = parse_uint(key, value);
  else if (key == "graph_dropout") graph_dropout = parse_bool(key, value);
  else if (key == "theta_fg") theta_fg = parse_double(key, value);
  else if (key == "theta_bg") theta_bg = parse_double(key, value);
  else throw DataError("config: unknown key '" + std::string(key) + "'");
}

void TrainConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (K < 1) throw ContractError("config: K must be at least 1");
  if (T < 1) throw ContractError("config: T must be at least 1");
  if (!unit(delta_r) || !unit(delta_d)) throw ContractError("config: dropout thresholds must lie in [0,1]");
  if (lambda < 0.0) throw ContractError("config: lambda must be non-negative");
  if (d < 1 || channels % d != 0) throw ContractError("config: d must divide channels");
  if (channels % 8 != 0) throw ContractError("config: channels must be divisible by 8");
  if (lr_decay_every < 1) throw ContractError("config: lr_decay_every must be positive");
  if (!(0.0 <= theta_bg && theta_bg < theta_fg && theta_fg <= 1.0)) {
    throw ContractError("config: need 0 <= theta_bg < theta_fg <= 1");
  }
  if (num_classes < 1) throw ContractError("config: num_classes must be positive");
}

std::vector<std::string> TrainConfig::keys() {
  return {"K",        "T",        "delta_r",      "delta_d",     "lambda",          "d",
          "epochs",   "lr_backbone", "lr_gnn",    "lr_decay_factor", "lr_decay_every", "momentum",
          "weight_decay", "seed", "channels",     "num_classes", "graph_dropout",   "theta_fg",
          "theta_bg"};
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "K = " << K << '\n'
     << "T = " << T << '\n'
     << "delta_r = " << format_double(delta_r) << '\n'
     << "delta_d = " << format_double(delta_d) << '\n'
     << "lambda = " << format_double(lambda) << '\n'
     << "d = " << d << '\n'
     << "epochs = " << epochs << '\n'
     << "lr_backbone = " << format_double(lr_backbone) << '\n'
     << "lr_gnn = " << format_double(lr_gnn) << '\n'
     << "lr_decay_factor = " << format_double(lr_decay_factor) << '\n'
     << "lr_decay_every = " << lr_decay_every << '\n'
     << "momentum = " << format_double(momentum) << '\n'
     << "weight_decay = " << format_double(weight_decay) << '\n'
     << "seed = " << seed << '\n'
     << "channels = " << channels << '\n'
     << "num_classes = " << num_classes << '\n'
     << "graph_dropout = " << (graph_dropout ? "true" : "false") << '\n'
     << "theta_fg = " << format_double(theta_fg) << '\n'
     << "theta_bg = " << format_double(theta_bg) << '\n';
  return os.str();
}

TrainConfig TrainConfig::from_text(std::string_view text) {
  TrainConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const DataError& e) {
      throw DataError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return TrainConfig::from_text(buffer.str());
}

double TrainConfig::lr_at(double base, std::size_t epoch) const {
  return base * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_every));
}

}  // namespace gwsm
