#include "pursuitlab/logio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "pursuitlab/errors.hpp"

namespace pursuitlab {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string to_jsonl(const StepLogRow& row) {
  // The JSON library's shortest-round-trip double printer keeps the logged
  // numbers exact, so offline re-aggregation reproduces the reported rates
  // bit for bit.
  json obj;
  obj["step"] = row.step;
  obj["obs_text"] = row.obs_text;
  obj["candidates"] = row.candidates;
  obj["r_d"] = row.r_d;
  obj["mu"] = row.mu;
  obj["sigma"] = row.sigma;
  obj["r_n"] = row.r_n;
  obj["diameter"] = row.diameter;
  obj["chosen"] = row.chosen;
  obj["log_prob"] = row.log_prob;
  obj["reward"] = row.reward;
  obj["e_dir"] = row.e_dir;
  obj["d_err"] = row.d_err;
  return obj.dump();
}

StepLogRow step_row_from_json(const std::string& line) {
  const json obj = json::parse(line);
  StepLogRow row;
  row.step = obj.at("step").get<int64_t>();
  row.obs_text = obj.at("obs_text").get<std::string>();
  row.candidates = obj.at("candidates").get<std::vector<std::string>>();
  row.r_d = obj.at("r_d").get<std::vector<double>>();
  row.mu = obj.at("mu").get<double>();
  row.sigma = obj.at("sigma").get<double>();
  row.r_n = obj.at("r_n").get<std::vector<double>>();
  row.diameter = obj.at("diameter").get<double>();
  row.chosen = obj.at("chosen").get<int>();
  row.log_prob = obj.at("log_prob").get<double>();
  row.reward = obj.at("reward").get<double>();
  row.e_dir = obj.at("e_dir").get<double>();
  row.d_err = obj.at("d_err").get<double>();
  return row;
}

JsonlWriter::JsonlWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
}

void JsonlWriter::write(const StepLogRow& row) { out_ << to_jsonl(row) << '\n'; }

void JsonlWriter::close() { out_.close(); }

CsvWriter::CsvWriter(const std::string& path, std::span<const std::string> header) : out_(path) {
  if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::write_row(std::span<const double> values) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

void write_svg_line_chart(const std::string& path, const std::string& title,
                          std::span<const double> xs, std::span<const PlotSeries> series) {
  const int width = 720, height = 420, margin = 50;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (double x : xs) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
  }
  for (const auto& s : series) {
    for (double y : s.ys) {
      if (!std::isfinite(y)) continue;
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo) || x_hi == x_lo) x_hi = x_lo + 1.0;
  if (!std::isfinite(y_lo)) {
    y_lo = 0.0;
    y_hi = 1.0;
  }
  if (y_hi == y_lo) y_hi = y_lo + 1.0;

  auto px = [&](double x) {
    return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin);
  };
  auto py = [&](double y) {
    return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
  };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = x_lo + (x_hi - x_lo) * tick / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * tick / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << height - margin + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(xv) << "</text>\n";
    out << "<text x=\"" << margin - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(yv) << "</text>\n";
  }
  for (size_t si = 0; si < series.size(); ++si) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[si % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < series[si].ys.size() && i < xs.size(); ++i) {
      if (!std::isfinite(series[si].ys[i])) continue;
      out << px(xs[i]) << ',' << py(series[si].ys[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 * (si + 1)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kColors[si % 5] << "\">"
        << series[si].label << "</text>\n";
  }
  out << "</svg>\n";
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create output directory '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace pursuitlab
