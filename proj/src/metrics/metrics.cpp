#include "qcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qcnn {

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: prediction and label counts differ");
  if (labels.empty()) throw ShapeError("accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return double(hits) / double(labels.size());
}

double psnr(const Image& output, const Image& reference) {
  if (output.height != reference.height || output.width != reference.width)
    throw ShapeError("psnr: image sizes differ");
  if (output.pixels.empty()) throw ShapeError("psnr: empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < output.pixels.size(); ++i) {
    const double d = std::clamp(double(output.pixels[i]), 0.0, 1.0) - std::clamp(double(reference.pixels[i]), 0.0, 1.0);
    se += d * d;
  }
  const double mse = se / double(output.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double mean_saturation(const Image& img) {
  const std::size_t n = img.pixels.size() / 3;
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = img.pixels.data() + 3 * i;
    const double hi = std::max({p[0], p[1], p[2]}), lo = std::min({p[0], p[1], p[2]});
    if (hi > 0.0) sum += (hi - lo) / hi;
  }
  return sum / double(n);
}

double mean_gray_angle(const Image& img) {
  const std::size_t n = img.pixels.size() / 3;
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
    const double len = std::sqrt(r * r + g * g + b * b);
    if (len == 0.0) continue;
    sum += std::acos(std::clamp((r + g + b) / (std::sqrt(3.0) * len), -1.0, 1.0));
  }
  return sum / double(n);
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string metrics_csv(std::span<const EpochRecord> records) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : records)
    out += std::to_string(r.epoch) + "," + format_number(r.train_loss) + "," + format_number(r.eval_metric) + "," +
           format_number(r.wall_secs) + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

void write_metrics_csv(std::span<const EpochRecord> records, const std::filesystem::path& path) {
  write_text_file(path, metrics_csv(records));
}

std::vector<EpochRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("metrics csv: unexpected header");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(row, s, ',')) throw FormatError("metrics csv: short row: " + line);
    try {
      out.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw FormatError("metrics csv: malformed row: " + line);
    }
  }
  return out;
}

std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str());
}

std::string paired_csv(std::span<const PairedRecord> records) {
  std::string out = std::string(kPairedHeader) + "\n";
  for (const auto& r : records)
    out += r.image_id + "," + format_number(r.saturation) + "," + format_number(r.gray_angle) + "," +
           format_number(r.psnr_real) + "," + format_number(r.psnr_quat) + "," + format_number(r.difference()) + "\n";
  return out;
}

void write_paired_csv(std::span<const PairedRecord> records, const std::filesystem::path& path) {
  write_text_file(path, paired_csv(records));
}

}  // namespace qcnn
