#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace pursuitlab {

// Deterministic number formatting shared by every artifact writer, so a
// re-run with the same seed reproduces files byte for byte.
std::string format_double(double v);

// One line of steps.jsonl: the observation text verbatim, the candidate
// rewards with their normalization statistics, and the step-level errors the
// success rates are aggregated from.
struct StepLogRow {
  int64_t step = 0;
  std::string obs_text;
  std::vector<std::string> candidates;
  std::vector<double> r_d;
  double mu = 0.0;
  double sigma = 0.0;
  std::vector<double> r_n;
  double diameter = 0.0;
  int chosen = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double e_dir = 0.0;
  double d_err = 0.0;
};

std::string to_jsonl(const StepLogRow& row);
StepLogRow step_row_from_json(const std::string& line);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void write(const StepLogRow& row);
  void close();

 private:
  std::ofstream out_;
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::span<const std::string> header);
  void write_row(std::span<const double> values);
  void close();

 private:
  std::ofstream out_;
};

// Minimal static line plot; one polyline per series, shared x values.
struct PlotSeries {
  std::string label;
  std::vector<double> ys;
};

void write_svg_line_chart(const std::string& path, const std::string& title,
                          std::span<const double> xs, std::span<const PlotSeries> series);

void ensure_directory(const std::string& path);
std::string read_file(const std::string& path);

}  // namespace pursuitlab
