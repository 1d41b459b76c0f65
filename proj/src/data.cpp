#include "survborrow/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace survborrow {

void SubjectRecord::validate() const {
  if (!(y >= 0.0) || !std::isfinite(y))
    throw ValidityError("record " + id + ": y must be finite and nonnegative");
  if (delta != 0 && delta != 1)
    throw ValidityError("record " + id + ": delta must be 0 or 1");
  if (a != 0 && a != 1) throw ValidityError("record " + id + ": a must be 0 or 1");
  if (r != 0 && r != 1) throw ValidityError("record " + id + ": r must be 0 or 1");
  if (r == 0 && a == 1)
    throw ValidityError("record " + id + ": external controls are untreated (r=0 implies a=0)");
  for (double v : x)
    if (!std::isfinite(v)) throw ValidityError("record " + id + ": non-finite covariate");
}

std::size_t Dataset::count(int r, int a) const {
  std::size_t n = 0;
  for (const auto& rec : records) n += (rec.r == r && rec.a == a);
  return n;
}

std::size_t Dataset::count_trial() const {
  std::size_t n = 0;
  for (const auto& rec : records) n += (rec.r == 1);
  return n;
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  for (const auto& rec : records) {
    rec.validate();
    if (rec.x.size() != covariate_names.size())
      throw ValidityError("record " + rec.id + ": covariate count mismatch");
    if (!seen.insert(rec.id).second)
      throw ValidityError("duplicate id " + rec.id);
  }
}

void TimeGrid::validate() const {
  if (times.empty()) throw ContractError("time grid is empty");
  if (!(tau > 0.0)) throw ContractError("tau must be positive");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw ContractError("grid times must be strictly increasing and positive");
    prev = t;
  }
  if (times.back() != tau) throw ContractError("last grid time must equal tau");
}

TimeGrid event_time_grid(const Dataset& data, double tau) {
  std::vector<double> t;
  t.reserve(data.records.size());
  for (const auto& rec : data.records)
    if (rec.delta == 1 && rec.y > 0.0 && rec.y < tau) t.push_back(rec.y);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.push_back(tau);
  TimeGrid grid{std::move(t), tau};
  grid.validate();
  return grid;
}

void SimulationConfig::validate() const {
  if (setting < 1 || setting > 5)
    throw ConfigError("unknown setting id " + std::to_string(setting));
  if (n_trial == 0 || n_external == 0) throw ConfigError("n_trial and n_external must be positive");
  if (n_treated > n_trial) throw ConfigError("n_treated must not exceed n_trial");
  if (n_treated == 0) throw ConfigError("n_treated must be positive");
  if (p < 1) throw ConfigError("p must be at least 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line_no) {
  const std::string f = trim(field);
  double value = 0.0;
  const char* first = f.data();
  const char* last = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + field +
                     "' as a number");
  return value;
}

int parse_binary(const std::string& field, const char* name, std::size_t line_no) {
  const double v = parse_double(field, line_no);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw ValidityError("line " + std::to_string(line_no) + ": " + name + " must be 0 or 1");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> expected_header(std::size_t p) {
  std::vector<std::string> h = {"id", "y", "delta", "a", "r"};
  for (std::size_t j = 1; j <= p; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

void check_header(const std::vector<std::string>& got, std::size_t p) {
  const auto want = expected_header(p);
  for (std::size_t j = 0; j < std::min(got.size(), want.size()); ++j) {
    if (trim(got[j]) != want[j])
      throw SchemaError("header column " + std::to_string(j + 1) + ": expected '" + want[j] +
                        "', found '" + trim(got[j]) + "'");
  }
  if (got.size() < want.size())
    throw SchemaError("missing column '" + want[got.size()] + "'");
  if (got.size() > want.size())
    throw SchemaError("unexpected extra column '" + trim(got[want.size()]) + "'");
}

Dataset load_dataset_checked(std::istream& in, std::size_t p) {
  Dataset data;
  data.covariate_names.reserve(p);
  for (std::size_t j = 1; j <= p; ++j) data.covariate_names.push_back("x" + std::to_string(j));

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5 + p)
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(5 + p) + " fields, found " + std::to_string(fields.size()));
    SubjectRecord rec;
    rec.id = trim(fields[0]);
    rec.y = parse_double(fields[1], line_no);
    rec.delta = parse_binary(fields[2], "delta", line_no);
    rec.a = parse_binary(fields[3], "a", line_no);
    rec.r = parse_binary(fields[4], "r", line_no);
    rec.x.reserve(p);
    for (std::size_t j = 0; j < p; ++j) rec.x.push_back(parse_double(fields[5 + j], line_no));
    try {
      rec.validate();
    } catch (const ValidityError& e) {
      throw ValidityError("line " + std::to_string(line_no) + ": " + e.what());
    }
    data.records.push_back(std::move(rec));
  }
  data.validate();
  return data;
}

}  // namespace

Dataset load_dataset(std::istream& in, std::size_t p) {
  std::string header;
  if (!std::getline(in, header)) throw SchemaError("empty input: missing header");
  check_header(split_csv_line(header), p);
  return load_dataset_checked(in, p);
}

Dataset load_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw SchemaError("empty input: missing header");
  const auto cols = split_csv_line(header);
  if (cols.size() < 5) throw SchemaError("header has fewer than 5 columns");
  const std::size_t p = cols.size() - 5;
  check_header(cols, p);
  return load_dataset_checked(in, p);
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_dataset(in);
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dataset(const Dataset& data, std::ostream& out) {
  out << "id,y,delta,a,r";
  for (std::size_t j = 1; j <= data.n_covariates(); ++j) out << ",x" << j;
  out << "\n";
  for (const auto& rec : data.records) {
    out << rec.id << ',' << format_double(rec.y) << ',' << rec.delta << ',' << rec.a << ','
        << rec.r;
    for (double v : rec.x) out << ',' << format_double(v);
    out << "\n";
  }
}

void write_dataset_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_dataset(data, out);
}

SimulationConfig parse_simulation_config(std::istream& in) {
  SimulationConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const double v = parse_double(value, line_no);
    if (key == "setting") cfg.setting = static_cast<int>(v);
    else if (key == "n_trial") cfg.n_trial = static_cast<std::size_t>(v);
    else if (key == "n_external") cfg.n_external = static_cast<std::size_t>(v);
    else if (key == "n_treated") cfg.n_treated = static_cast<std::size_t>(v);
    else if (key == "p") cfg.p = static_cast<std::size_t>(v);
    else if (key == "beta_c") cfg.beta_c = v;
    else if (key == "tau") cfg.tau = v;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(v);
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SimulationConfig parse_simulation_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_simulation_config(in);
}

}  // namespace survborrow
