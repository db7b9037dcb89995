#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace bidyn::trainer {

struct MetricsRow {
  int epoch = 0;
  long long env_steps = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double fwd_val_loss = 0.0;
  double bwd_val_loss = 0.0;
  int k1 = 0;
  int k2 = 0;
  double beta = 0.0;
  double alpha = 0.0;
  double q_loss = 0.0;
  double pi_loss = 0.0;
};

// Column names in file order.
const std::vector<std::string>& metrics_header();
// One CSV line (no newline); reals use fixed 6-digit precision.
std::string format_metrics_row(const MetricsRow& row);
MetricsRow parse_metrics_row(const std::string& line);

// Writes the header on open and flushes after every row.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRow& row);

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace bidyn::trainer
