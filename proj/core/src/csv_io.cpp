#include "covtest/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "covtest/error.hpp"

namespace covtest {

namespace {

constexpr int kPrecision = 17;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    std::ostringstream os;
    os << "line " << line_no << ": cannot parse number '" << field << "'";
    throw IoError(os.str());
  }
  return v;
}

std::vector<std::string> nonempty_lines(std::istream& is) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  writer(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  return is;
}

}  // namespace

void write_model_dense(std::ostream& os, const CovarianceModel& model) {
  os.precision(kPrecision);
  const int p = model.dim();
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (j) os << ',';
      os << model(i, j);
    }
    os << '\n';
  }
}

void write_model_toeplitz(std::ostream& os, const CovarianceModel& model) {
  os.precision(kPrecision);
  const auto d = model.toeplitz_diagonals();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (j) os << ',';
    os << d[j];
  }
  os << '\n';
}

CovarianceModel read_model(std::istream& is) {
  const auto lines = nonempty_lines(is);
  if (lines.empty()) throw IoError("model file is empty");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<double> row;
    for (const auto& f : split_fields(lines[i])) row.push_back(parse_number(f, i + 1));
    rows.push_back(std::move(row));
  }
  if (rows.size() == 1) return CovarianceModel::from_toeplitz(rows.front());
  const auto p = rows.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    if (rows[i].size() != p) {
      std::ostringstream os;
      os << "line " << i + 1 << ": expected " << p << " fields, found " << rows[i].size();
      throw IoError(os.str());
    }
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return CovarianceModel::from_matrix(std::move(m));
}

CovarianceModel read_model_file(const std::filesystem::path& path) {
  auto is = open_input(path);
  return read_model(is);
}

void write_model_file(const std::filesystem::path& path, const CovarianceModel& model, bool toeplitz_form) {
  write_file(path, [&](std::ostream& os) {
    if (toeplitz_form) {
      write_model_toeplitz(os, model);
    } else {
      write_model_dense(os, model);
    }
  });
}

void write_sample(std::ostream& os, const MaskedSample& sample) {
  os.precision(kPrecision);
  for (int k = 0; k < sample.n(); ++k) {
    for (int i = 0; i < sample.p(); ++i) {
      if (i) os << ',';
      if (sample.mask(k, i)) os << sample.y(k, i);
    }
    os << '\n';
  }
}

void write_sample_file(const std::filesystem::path& path, const MaskedSample& sample) {
  write_file(path, [&](std::ostream& os) { write_sample(os, sample); });
}

MaskedSample read_sample(std::istream& is, std::optional<double> a) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw IoError("sample file is empty");
  const auto p = split_fields(lines.front()).size();
  const auto n = lines.size();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  MaskMatrix mask = MaskMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < n; ++k) {
    const auto fields = split_fields(lines[k]);
    if (fields.size() != p) {
      std::ostringstream os;
      os << "line " << k + 1 << ": expected " << p << " fields, found " << fields.size();
      throw IoError(os.str());
    }
    for (std::size_t i = 0; i < p; ++i) {
      if (fields[i].empty()) continue;
      y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = parse_number(fields[i], k + 1);
      mask(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = 1;
    }
  }
  double a_value = 0.0;
  if (a) {
    a_value = *a;
  } else {
    a_value = mask.cast<double>().sum() / static_cast<double>(mask.size());
    if (a_value == 0.0) throw IoError("sample has no observed entries; pass a explicitly");
  }
  return make_sample(std::move(y), std::move(mask), a_value);
}

MaskedSample read_sample_file(const std::filesystem::path& path, std::optional<double> a) {
  auto is = open_input(path);
  return read_sample(is, a);
}

}  // namespace covtest
