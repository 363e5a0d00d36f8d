#include "machash/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace machash {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size();
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    fail(std::string("malformed header: truncated ") + what);
  return value;
}

Dataset load_csv(const std::filesystem::path& path, bool label_column) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t width = 0;
  bool first = true;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    double probe;
    if (first) {
      first = false;
      if (!cells.empty() && !parse_double(cells.front(), probe)) continue;  // header
    }
    ++row_no;
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      fail("dimension mismatch at row " + std::to_string(row_no) + ": expected " +
           std::to_string(width) + " columns, got " + std::to_string(cells.size()));
    }
    const std::size_t nfeat = label_column ? width - 1 : width;
    if (nfeat == 0) fail("row " + std::to_string(row_no) + " has no feature columns");
    std::vector<double> values(nfeat);
    for (std::size_t c = 0; c < nfeat; ++c) {
      if (!parse_double(cells[c], values[c]))
        fail("unparsable value '" + cells[c] + "' at row " + std::to_string(row_no) +
             ", column " + std::to_string(c + 1));
      if (!std::isfinite(values[c]))
        fail("non-finite value '" + cells[c] + "' at row " + std::to_string(row_no) +
             ", column " + std::to_string(c + 1));
    }
    if (label_column) {
      double lab;
      if (!parse_double(cells.back(), lab) || lab != std::floor(lab))
        fail("label at row " + std::to_string(row_no) + " is not an integer");
      labels.push_back(static_cast<int>(lab));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail("no data rows in " + path.string());
  FeatureMatrix x(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) x(r, c) = rows[r][c];
  std::optional<std::vector<int>> lab;
  if (label_column) lab = std::move(labels);
  return make_dataset(std::move(x), std::move(lab));
}

Dataset load_dense(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "BHD1", 4) != 0)
    fail("malformed header: bad magic in " + path.string());
  const auto n = read_le<std::uint32_t>(in, "N");
  const auto d = read_le<std::uint32_t>(in, "D");
  const auto dtype = read_le<std::uint8_t>(in, "dtype");
  if (dtype > 1) fail("malformed header: unknown dtype " + std::to_string(dtype));
  if (n == 0) fail("no data rows in " + path.string());
  if (d == 0) fail("malformed header: D = 0");
  FeatureMatrix x(n, d);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) {
      double v;
      if (!in) fail("dimension mismatch: file ends before row " + std::to_string(r + 1));
      if (dtype == 0) {
        float f;
        if (!in.read(reinterpret_cast<char*>(&f), sizeof f))
          fail("dimension mismatch: file ends at row " + std::to_string(r + 1));
        v = f;
      } else if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        fail("dimension mismatch: file ends at row " + std::to_string(r + 1));
      }
      if (!std::isfinite(v))
        fail("non-finite value at row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      x(r, c) = v;
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    fail("dimension mismatch: trailing bytes after " + std::to_string(n) + "x" + std::to_string(d) + " values");
  return make_dataset(std::move(x));
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.ids.reserve(indices.size());
  if (labels) out.labels.emplace();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto i = indices[r];
    if (i >= size()) throw std::out_of_range("subset index out of range");
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(i));
    out.ids.push_back(ids.empty() ? static_cast<std::int64_t>(i) : ids[i]);
    if (labels) out.labels->push_back((*labels)[i]);
  }
  return out;
}

void validate(const Dataset& d) {
  if (d.size() == 0) fail("dataset has no points");
  if (d.dim() == 0) fail("dataset has no feature dimensions");
  if (d.labels && d.labels->size() != d.size())
    fail("label count " + std::to_string(d.labels->size()) + " != N " + std::to_string(d.size()));
  if (!d.ids.empty() && d.ids.size() != d.size()) fail("id count != N");
  for (Eigen::Index r = 0; r < d.features.rows(); ++r)
    for (Eigen::Index c = 0; c < d.features.cols(); ++c)
      if (!std::isfinite(d.features(r, c)))
        fail("non-finite value at row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
}

Dataset make_dataset(FeatureMatrix features, std::optional<std::vector<int>> labels) {
  Dataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.ids.resize(d.size());
  std::iota(d.ids.begin(), d.ids.end(), std::int64_t{0});
  validate(d);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, bool label_column) {
  if (!std::filesystem::exists(path)) fail("no such file: " + path.string());
  return format == DataFormat::csv ? load_csv(path, label_column) : load_dense(path);
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int c = 0; c < d.dim(); ++c) out << (c ? "," : "") << 'x' << c;
  if (d.labels) out << ",label";
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (int c = 0; c < d.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", d.features(static_cast<Eigen::Index>(r), c));
      out << (c ? "," : "") << buf;
    }
    if (d.labels) out << ',' << (*d.labels)[r];
    out << '\n';
  }
}

void save_dense_binary(const Dataset& d, const std::filesystem::path& path, bool single_precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("BHD1", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.dim()));
  write_le<std::uint8_t>(out, single_precision ? 0 : 1);
  for (Eigen::Index r = 0; r < d.features.rows(); ++r)
    for (Eigen::Index c = 0; c < d.features.cols(); ++c) {
      if (single_precision)
        write_le<float>(out, static_cast<float>(d.features(r, c)));
      else
        write_le<double>(out, d.features(r, c));
    }
}

FeatureMatrix center_and_normalize(const FeatureMatrix& x) {
  FeatureMatrix out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm > 0) out.row(r) /= norm;
  }
  return out;
}

std::vector<std::size_t> nearest_neighbors(const FeatureMatrix& base,
                                           const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                           std::size_t k, std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(static_cast<std::size_t>(base.rows()));
  for (Eigen::Index r = 0; r < base.rows(); ++r) {
    if (exclude && static_cast<std::size_t>(r) == *exclude) continue;
    dist.emplace_back((base.row(r) - query).squaredNorm(), static_cast<std::size_t>(r));
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

Split make_split(std::size_t points, std::size_t train, std::size_t validation,
                 std::size_t test, std::uint64_t seed) {
  if (train + validation + test > points)
    fail("split sizes " + std::to_string(train + validation + test) + " exceed N = " + std::to_string(points));
  std::vector<std::size_t> perm(points);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(train),
                      perm.begin() + static_cast<std::ptrdiff_t>(train + validation));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(train + validation),
                perm.begin() + static_cast<std::ptrdiff_t>(train + validation + test));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void validate(const Split& split, std::size_t points, bool require_validation) {
  std::vector<char> role(points, 0);
  for (auto i : split.train) {
    if (i >= points) fail("train index out of range");
    role[i] = 1;
  }
  for (auto i : split.validation) {
    if (i >= points) fail("validation index out of range");
    if (role[i] == 1) fail("train and validation overlap at index " + std::to_string(i));
  }
  for (auto i : split.test)
    if (i >= points) fail("test index out of range");
  if (split.train.empty()) fail("empty training split");
  if (require_validation && split.validation.empty())
    fail("validation split is empty but early stopping is enabled");
}

}  // namespace machash
