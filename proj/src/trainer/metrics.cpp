#include "bidyn/trainer/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "bidyn/common/errors.hpp"

namespace bidyn::trainer {

const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> header = {
      "epoch", "env_steps", "eval_return_mean", "eval_return_std", "fwd_val_loss", "bwd_val_loss",
      "k1",    "k2",        "beta",             "alpha",           "q_loss",       "pi_loss"};
  return header;
}

std::string format_metrics_row(const MetricsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%lld,%.6f,%.6f,%.6f,%.6f,%d,%d,%.6f,%.6f,%.6f,%.6f", r.epoch,
                r.env_steps, r.eval_return_mean, r.eval_return_std, r.fwd_val_loss, r.bwd_val_loss,
                r.k1, r.k2, r.beta, r.alpha, r.q_loss, r.pi_loss);
  return buf;
}

MetricsRow parse_metrics_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (f.size() != metrics_header().size())
    throw InputError("parse_metrics_row: expected " + std::to_string(metrics_header().size()) +
                     " fields");
  MetricsRow r;
  r.epoch = std::stoi(f[0]);
  r.env_steps = std::stoll(f[1]);
  r.eval_return_mean = std::stod(f[2]);
  r.eval_return_std = std::stod(f[3]);
  r.fwd_val_loss = std::stod(f[4]);
  r.bwd_val_loss = std::stod(f[5]);
  r.k1 = std::stoi(f[6]);
  r.k2 = std::stoi(f[7]);
  r.beta = std::stod(f[8]);
  r.alpha = std::stod(f[9]);
  r.q_loss = std::stod(f[10]);
  r.pi_loss = std::stod(f[11]);
  return r;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path), path_(path) {
  if (!out_) throw IoError("cannot open metrics file '" + path + "'");
  const auto& h = metrics_header();
  for (std::size_t i = 0; i < h.size(); ++i) out_ << (i ? "," : "") << h[i];
  out_ << '\n';
  out_.flush();
}

void MetricsWriter::append(const MetricsRow& row) {
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed on '" + path_ + "'");
}

}  // namespace bidyn::trainer
