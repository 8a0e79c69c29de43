#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gwsm {

struct TrainConfig {
  std::size_t K = 4;
  std::size_t T = 3;
  double delta_r = 0.8;
  double delta_d = 0.7;
  double lambda = 0.4;
  std::size_t d = 4;
  std::size_t epochs = 15;
  double lr_backbone = 1e-3;
  double lr_gnn = 1e-2;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 5;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  std::size_t channels = 64;
  std::size_t num_classes = 6;
  bool graph_dropout = true;  // false: identity mask, the "w/o dropout" ablation
  double theta_fg = 0.3;
  double theta_bg = 0.05;

  // Sets one key from its text form; throws DataError on unknown keys or
  // unparsable values.
  void set(std::string_view key, std::string_view value);
  // Throws ContractError when a field is out of range.
  void validate() const;

  // Canonical `key = value` block, one line per key, fixed order.
  std::string to_text() const;
  static TrainConfig from_text(std::string_view text);
  static std::vector<std::string> keys();

  double lr_at(double base, std::size_t epoch) const;
};

TrainConfig load_config_file(const std::string& path);

std::string format_double(double v);

}  // namespace gwsm
