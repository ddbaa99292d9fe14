#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "dssm/data.hpp"

namespace dssm::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Tensor SeriesFrame::rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > length()) {
    throw DataError("rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                    ") out of range for a series of length " + std::to_string(length()));
  }
  const std::size_t m = width();
  const auto v = values.data();
  return Tensor::from({end - begin, m}, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin * m),
                                                           v.begin() + static_cast<std::ptrdiff_t>(end * m)));
}

SeriesFrame SeriesFrame::segment(std::size_t begin, std::size_t end) const {
  SeriesFrame out;
  out.names = names;
  if (!timestamps.empty()) {
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  }
  out.values = rows(begin, end);
  return out;
}

SeriesFrame load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, header_line)) {
    ++line_no;
    if (!trim(header_line).empty()) break;
  }
  if (trim(header_line).empty()) throw DataError("'" + path.string() + "' is empty");
  header = split_fields(header_line);
  if (header.size() < 2) {
    throw DataError("'" + path.string() + "' needs a timestamp column and at least one variable");
  }
  const std::size_t m = header.size() - 1;

  SeriesFrame frame;
  for (std::size_t j = 1; j < header.size(); ++j) frame.names.emplace_back(header[j]);

  std::vector<double> values;
  std::vector<bool> seen(m, false);
  std::vector<double> last(m, 0.0);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("'" + path.string() + "' line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(fields.size()));
    }
    frame.timestamps.emplace_back(fields[0]);
    for (std::size_t j = 0; j < m; ++j) {
      std::optional<double> v = parse_number(fields[j + 1]);
      if (!v) {
        if (options.missing == MissingPolicy::Error) {
          throw DataError("'" + path.string() + "' line " + std::to_string(line_no) +
                          ": missing or non-numeric value in column '" + frame.names[j] + "'");
        }
        if (!seen[j]) {
          // Leading gap: decided once the whole column is known.
          values.push_back(std::nan(""));
          continue;
        }
        v = last[j];
      }
      seen[j] = true;
      last[j] = *v;
      values.push_back(*v);
    }
  }

  const std::size_t n = frame.timestamps.size();
  if (n == 0) throw DataError("'" + path.string() + "' has a header but no data rows");
  for (std::size_t j = 0; j < m; ++j) {
    if (!seen[j]) throw DataError("'" + path.string() + "': column '" + frame.names[j] + "' has no numeric values");
    if (std::isnan(values[j])) {
      throw DataError("'" + path.string() + "': column '" + frame.names[j] +
                      "' starts with a missing value (nothing to forward-fill)");
    }
  }
  frame.values = Tensor::from({n, m}, std::move(values));
  return frame;
}

void write_csv(const std::filesystem::path& path, const SeriesFrame& frame) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "date";
  for (const auto& name : frame.names) out << ',' << name;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < frame.length(); ++t) {
    if (frame.timestamps.empty()) out << t;
    else out << frame.timestamps[t];
    for (std::size_t j = 0; j < frame.width(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.at(t, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace dssm::data
