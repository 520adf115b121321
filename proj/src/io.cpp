#include "fungraph/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fungraph {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'D', '1'};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void data_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::DataError, "line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view s, std::size_t line_no) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) data_error(line_no, "bad number '" + std::string(s) + "'");
  return v;
}

Index parse_index(std::string_view s, std::size_t line_no) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) data_error(line_no, "bad index '" + std::string(s) + "'");
  if (v < 1) data_error(line_no, "indices are 1-based");
  return static_cast<Index>(v);
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::vector<std::string> header_fields(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!next_line(in, line, line_no)) throw Error(ErrorCode::DataError, "empty input");
  std::vector<std::string> out;
  for (auto f : split(line)) out.emplace_back(trim(f));
  return out;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw Error(ErrorCode::DataError, "truncated binary header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

void put_f64(std::ostream& out, double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof bits);
  put_u64(out, bits);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

FunctionalDataset read_long_csv(std::istream& in) {
  std::size_t line_no = 0;
  const auto header = header_fields(in, line_no);
  if (header != std::vector<std::string>{"subject", "variable", "t", "value"})
    data_error(line_no, "expected header subject,variable,t,value");
  struct Row {
    Index i, j, t;
    double v;
  };
  std::vector<Row> rows;
  Index n = 0, p = 0, T = 0;
  std::string line;
  while (next_line(in, line, line_no)) {
    const auto f = split(line);
    if (f.size() != 4) data_error(line_no, "expected 4 fields");
    Row r{parse_index(f[0], line_no), parse_index(f[1], line_no), parse_index(f[2], line_no), parse_double(f[3], line_no)};
    n = std::max(n, r.i);
    p = std::max(p, r.j);
    T = std::max(T, r.t);
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::DataError, "no observations");
  if (static_cast<Index>(rows.size()) != n * p * T)
    throw Error(ErrorCode::DataError, "expected " + std::to_string(n * p * T) + " observations for n=" + std::to_string(n) +
                                          ", p=" + std::to_string(p) + ", T=" + std::to_string(T) + ", found " +
                                          std::to_string(rows.size()));
  FunctionalDataset data(n, p, T);
  std::vector<bool> filled(static_cast<std::size_t>(n * p * T), false);
  for (const auto& r : rows) {
    const auto slot = static_cast<std::size_t>(((r.i - 1) * p + (r.j - 1)) * T + (r.t - 1));
    if (filled[slot])
      throw Error(ErrorCode::DataError, "duplicate observation subject=" + std::to_string(r.i) + " variable=" +
                                            std::to_string(r.j) + " t=" + std::to_string(r.t));
    filled[slot] = true;
    data(r.i - 1, r.j - 1, r.t - 1) = r.v;
  }
  data.validate();
  return data;
}

void write_long_csv(std::ostream& out, const FunctionalDataset& data) {
  out << "subject,variable,t,value\n";
  for (Index i = 0; i < data.n(); ++i)
    for (Index j = 0; j < data.p(); ++j)
      for (Index t = 0; t < data.T(); ++t)
        out << i + 1 << ',' << j + 1 << ',' << t + 1 << ',' << format_double(data(i, j, t)) << '\n';
}

FunctionalDataset read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::DataError, "missing FGD1 magic");
  const std::uint64_t n = get_u64(in), p = get_u64(in), T = get_u64(in);
  constexpr std::uint64_t kLimit = 1ULL << 31;
  if (n == 0 || p == 0 || T == 0 || n > kLimit || p > kLimit || T > kLimit || n * p * T > (1ULL << 33))
    throw Error(ErrorCode::DataError, "implausible binary dimensions");
  FunctionalDataset data(static_cast<Index>(n), static_cast<Index>(p), static_cast<Index>(T));
  for (Index i = 0; i < data.n(); ++i)
    for (Index j = 0; j < data.p(); ++j)
      for (Index t = 0; t < data.T(); ++t) {
        const std::uint64_t bits = get_u64(in);
        double x = 0.0;
        std::memcpy(&x, &bits, sizeof x);
        data(i, j, t) = x;
      }
  data.validate();
  return data;
}

void write_binary(std::ostream& out, const FunctionalDataset& data) {
  out.write(kMagic, 4);
  put_u64(out, static_cast<std::uint64_t>(data.n()));
  put_u64(out, static_cast<std::uint64_t>(data.p()));
  put_u64(out, static_cast<std::uint64_t>(data.T()));
  for (Index i = 0; i < data.n(); ++i)
    for (Index j = 0; j < data.p(); ++j)
      for (Index t = 0; t < data.T(); ++t) put_f64(out, data(i, j, t));
}

FunctionalDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataError, "cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in) : read_long_csv(in);
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::string line;
  while (next_line(in, line, line_no)) {
    std::vector<double> row;
    for (auto f : split(line)) row.push_back(parse_double(f, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) data_error(line_no, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::DataError, "empty matrix");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < M.rows(); ++r)
    for (Index c = 0; c < M.cols(); ++c) M(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return M;
}

void write_edges_csv(std::ostream& out, const CrossCovFunction& summary, const EdgeFunction& edges) {
  out << "t,j,l,mean,lb,ub,selected\n";
  const Index p = summary.p;
  for (Index t = 0; t < summary.T; ++t)
    for (Index j = 0; j < p; ++j)
      for (Index l = j + 1; l < p; ++l) {
        const Index q = pair_index(j, l, p);
        out << t + 1 << ',' << j + 1 << ',' << l + 1 << ',' << format_double(summary.mean(t, q)) << ','
            << format_double(summary.lower(t, q)) << ',' << format_double(summary.upper(t, q)) << ','
            << (edges.selected(t, q) ? 1 : 0) << '\n';
      }
}

void write_lagprofile_csv(std::ostream& out, Index t, const std::vector<Index>& tprimes, Index j, Index l,
                          const Vector& profile) {
  out << "t,tprime,j,l,mean\n";
  for (std::size_t i = 0; i < tprimes.size(); ++i)
    out << t + 1 << ',' << tprimes[i] + 1 << ',' << j + 1 << ',' << l + 1 << ','
        << format_double(profile(static_cast<Index>(i))) << '\n';
}

void write_truth_csv(std::ostream& out, const TruthGraph& truth) {
  out << "t,j,l\n";
  for (Index t = 0; t < truth.T; ++t)
    for (Index j = 0; j < truth.p; ++j)
      for (Index l = j + 1; l < truth.p; ++l)
        if (truth.present(t, pair_index(j, l, truth.p))) out << t + 1 << ',' << j + 1 << ',' << l + 1 << '\n';
}

void write_chain_csv(std::ostream& out, const ChainDraws& chain, Index p) {
  out << "draw,lambda";
  for (Index j = 0; j < p; ++j) out << ",s_" << j + 1;
  for (Index j = 0; j < p; ++j)
    for (Index l = j + 1; l < p; ++l) out << ",c_" << j + 1 << '_' << l + 1;
  out << '\n';
  for (Index m = 0; m < chain.lambda.size(); ++m) {
    out << m + 1 << ',' << format_double(chain.lambda(m));
    for (Index j = 0; j < p; ++j) out << ',' << format_double(chain.s(m, j));
    for (Index q = 0; q < chain.c.cols(); ++q) out << ',' << format_double(chain.c(m, q));
    out << '\n';
  }
}

void write_acceptance(std::ostream& out, const PosteriorDraws& draws) {
  out << "param,rate\n";
  const Index p = draws.p;
  for (Index k = 0; k < draws.K(); ++k) {
    const ChainDraws& ch = draws.chains[static_cast<std::size_t>(k)];
    for (Index j = 0; j < p; ++j)
      for (Index l = j + 1; l < p; ++l)
        out << "k" << k + 1 << ".rho_" << j + 1 << '_' << l + 1 << ','
            << format_double(ch.rho_acceptance(pair_index(j, l, p))) << '\n';
    for (Index j = 0; j < p; ++j) out << "k" << k + 1 << ".s_" << j + 1 << ',' << format_double(ch.s_acceptance(j)) << '\n';
  }
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i)
    out << format_double(roc.threshold[i]) << ',' << format_double(roc.fpr[i]) << ',' << format_double(roc.tpr[i]) << '\n';
}

EdgeTable read_edge_table(std::istream& in, Index p, Index T) {
  std::size_t line_no = 0;
  const auto header = header_fields(in, line_no);
  const bool edges = header == std::vector<std::string>{"t", "j", "l", "mean", "lb", "ub", "selected"};
  const bool scores = header == std::vector<std::string>{"t", "j", "l", "score"};
  if (!edges && !scores) data_error(line_no, "expected header t,j,l,mean,lb,ub,selected or t,j,l,score");
  struct Row {
    Index t, j, l;
    double score;
    bool selected;
  };
  std::vector<Row> rows;
  Index max_t = 0, max_var = 0;
  std::string line;
  while (next_line(in, line, line_no)) {
    const auto f = split(line);
    if (f.size() != header.size()) data_error(line_no, "expected " + std::to_string(header.size()) + " fields");
    Row r{parse_index(f[0], line_no), parse_index(f[1], line_no), parse_index(f[2], line_no), 0.0, false};
    if (r.j >= r.l) data_error(line_no, "pairs must satisfy j < l");
    if (edges) {
      r.score = std::abs(parse_double(f[3], line_no));
      const auto sel = trim(f[6]);
      if (sel != "0" && sel != "1") data_error(line_no, "selected must be 0 or 1");
      r.selected = sel == "1";
    } else {
      r.score = parse_double(f[3], line_no);
    }
    max_t = std::max(max_t, r.t);
    max_var = std::max(max_var, r.l);
    rows.push_back(r);
  }
  EdgeTable table;
  table.p = p > 0 ? p : max_var;
  table.T = T > 0 ? T : max_t;
  table.has_selection = edges;
  if (max_t > table.T || max_var > table.p) throw Error(ErrorCode::DataError, "edge table exceeds the stated dimensions");
  const Index npairs = pair_count(table.p);
  table.selected = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(table.T, npairs, false);
  table.score = Matrix::Zero(table.T, npairs);
  for (const auto& r : rows) {
    const Index q = pair_index(r.j - 1, r.l - 1, table.p);
    table.selected(r.t - 1, q) = r.selected;
    table.score(r.t - 1, q) = r.score;
  }
  return table;
}

TruthGraph read_truth_csv(std::istream& in, Index p, Index T) {
  std::size_t line_no = 0;
  const auto header = header_fields(in, line_no);
  if (header != std::vector<std::string>{"t", "j", "l"}) data_error(line_no, "expected header t,j,l");
  TruthGraph g;
  g.p = p;
  g.T = T;
  g.present = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(T, pair_count(p), false);
  g.level = Matrix::Zero(T, pair_count(p));
  std::string line;
  while (next_line(in, line, line_no)) {
    const auto f = split(line);
    if (f.size() != 3) data_error(line_no, "expected 3 fields");
    const Index t = parse_index(f[0], line_no), j = parse_index(f[1], line_no), l = parse_index(f[2], line_no);
    if (j >= l) data_error(line_no, "pairs must satisfy j < l");
    if (t > T || l > p)
      throw Error(ErrorCode::DataError, "truth edge (" + std::to_string(t) + "," + std::to_string(j) + "," +
                                            std::to_string(l) + ") lies outside p=" + std::to_string(p) +
                                            ", T=" + std::to_string(T));
    g.present(t - 1, pair_index(j - 1, l - 1, p)) = true;
  }
  return g;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DataError, "cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace fungraph
