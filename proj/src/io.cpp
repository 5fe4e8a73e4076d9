#include "riffle/io.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "riffle/error.hpp"

namespace riffle::io {

namespace {

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [l, c] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    parse_fail(l, c, "invalid JSON");
  }
}

// comma separated numbers starting at text[offset]
std::vector<double> parse_numbers(const std::string& text, std::size_t offset) {
  std::vector<double> out;
  std::size_t i = offset;
  while (true) {
    double v = 0;
    const char* first = text.data() + i;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc()) parse_fail(1, i + 1, "expected a number");
    out.push_back(v);
    i = static_cast<std::size_t>(ptr - text.data());
    if (i == text.size()) break;
    if (text[i] != ',') parse_fail(1, i + 1, "expected ','");
    ++i;
  }
  return out;
}

std::vector<double> numbers_of(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) fail(ErrorCode::ParseError, std::string("missing array '") + key + "'");
  std::vector<double> v;
  for (const auto& x : j[key]) {
    if (!x.is_number()) fail(ErrorCode::ParseError, std::string("non-numeric entry in '") + key + "'");
    v.push_back(x.get<double>());
  }
  return v;
}

double number_of(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) fail(ErrorCode::ParseError, std::string("missing number '") + key + "'");
  return j[key].get<double>();
}

std::vector<SimplexPoint> points_of(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) fail(ErrorCode::ParseError, std::string("missing array '") + key + "'");
  std::vector<SimplexPoint> pts;
  for (const auto& row : j[key]) pts.push_back(row.get<SimplexPoint>());
  return pts;
}

SimplexMeasure measure_from_json(const json& j) {
  if (j.is_string()) return parse_measure(j.get<std::string>());
  if (!j.is_object() || !j.contains("type")) fail(ErrorCode::ParseError, "measure needs a 'type'");
  const auto type = j["type"].get<std::string>();
  SimplexMeasure mu;
  if (type == "beta") {
    mu = BetaMeasure{number_of(j, "a"), number_of(j, "b")};
  } else if (type == "point") {
    mu = PointMass{numbers_of(j, "p")};
  } else if (type == "dirichlet") {
    mu = Dirichlet{numbers_of(j, "alpha")};
  } else if (type == "uniform_interval") {
    mu = UniformInterval{number_of(j, "lo"), number_of(j, "hi")};
  } else if (type == "mixture") {
    mu = FiniteMixture{numbers_of(j, "weights"), points_of(j, "atoms")};
  } else if (type == "empirical") {
    mu = Empirical{points_of(j, "samples")};
  } else {
    fail(ErrorCode::ParseError, "unknown measure type: " + type);
  }
  validate(mu);
  return mu;
}

Rounding rounding_of(const json& j) {
  if (!j.contains("rounding")) return Rounding::Multinomial;
  const auto r = j["rounding"].get<std::string>();
  if (r == "multinomial") return Rounding::Multinomial;
  if (r == "largest_remainder") return Rounding::LargestRemainder;
  fail(ErrorCode::ParseError, "unknown rounding: " + r);
}

CutProcess process_from_json(const json& j) {
  if (j.is_string()) return parse_process(j.get<std::string>());
  if (!j.is_object() || !j.contains("type")) fail(ErrorCode::ParseError, "process needs a 'type'");
  const auto type = j["type"].get<std::string>();
  if (type == "gsr") return gsr_process();
  if (type == "uniform_cut") return {UniformCut{}};
  if (type == "bisection") return {ExactBisection{}};
  if (type == "fixed_fraction") return {FixedFraction{numbers_of(j, "q")}};
  if (type == "multinomial") return {IIDMultinomial{numbers_of(j, "p")}};
  if (type == "measure") {
    if (!j.contains("measure")) fail(ErrorCode::ParseError, "process 'measure' needs a 'measure'");
    return {IIDFromMeasure{measure_from_json(j["measure"]), rounding_of(j)}};
  }
  if (type == "explicit") {
    if (!j.contains("piles") || !j["piles"].is_array()) fail(ErrorCode::ParseError, "explicit process needs 'piles'");
    ExplicitSequence seq;
    for (const auto& step : j["piles"]) seq.steps.push_back(step.get<PileSizes>());
    if (seq.steps.empty()) fail(ErrorCode::ParseError, "explicit process needs at least one step");
    return {seq};
  }
  if (type == "periodic") {
    if (!j.contains("cycle") || !j["cycle"].is_array()) fail(ErrorCode::ParseError, "periodic process needs 'cycle'");
    Periodic per;
    for (const auto& c : j["cycle"]) per.cycle.push_back(process_from_json(c));
    if (per.cycle.empty()) fail(ErrorCode::ParseError, "periodic process needs a nonempty cycle");
    return {per};
  }
  fail(ErrorCode::ParseError, "unknown process type: " + type);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

bool looks_like_json(const std::string& s) { return !s.empty() && (s[0] == '{' || s[0] == '"'); }

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    if (std::isnan(d)) return "nan";
    std::ostringstream os;
    os << std::setprecision(10) << d;
    return os.str();
  }
  if (v.is_structured()) return csv_cell(json(v.dump()));
  return v.dump();
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

SimplexMeasure parse_measure(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) parse_fail(1, 1, "empty measure");
  if (looks_like_json(text)) return measure_from_json(parse_json(text));
  for (const auto& [name, mu] : table1_measures())
    if (name == text) return mu;
  if (text == "uniform_cut") return BetaMeasure{1, 1};
  if (text == "gsr") return PointMass{{0.5, 0.5}};
  const auto colon = text.find(':');
  if (colon == std::string::npos) parse_fail(1, 1, "unknown measure '" + text + "'");
  const auto kind = text.substr(0, colon);
  const auto v = parse_numbers(text, colon + 1);
  SimplexMeasure mu;
  if (kind == "beta") {
    if (v.size() != 2) parse_fail(1, colon + 2, "beta takes two parameters");
    mu = BetaMeasure{v[0], v[1]};
  } else if (kind == "point") {
    mu = PointMass{v};
  } else if (kind == "dirichlet") {
    mu = Dirichlet{v};
  } else if (kind == "uniform_interval") {
    if (v.size() != 2) parse_fail(1, colon + 2, "uniform_interval takes two parameters");
    mu = UniformInterval{v[0], v[1]};
  } else {
    parse_fail(1, 1, "unknown measure kind '" + kind + "'");
  }
  validate(mu);
  return mu;
}

CutProcess parse_process(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) parse_fail(1, 1, "empty process");
  if (looks_like_json(text)) return process_from_json(parse_json(text));
  if (text == "gsr") return gsr_process();
  if (text == "uniform_cut") return {UniformCut{}};
  if (text == "bisection") return {ExactBisection{}};
  const auto colon = text.find(':');
  if (colon == std::string::npos) parse_fail(1, 1, "unknown process '" + text + "'");
  const auto kind = text.substr(0, colon);
  if (kind == "fixed_fraction") return {FixedFraction{parse_numbers(text, colon + 1)}};
  if (kind == "multinomial") return {IIDMultinomial{parse_numbers(text, colon + 1)}};
  if (kind == "measure") return {IIDFromMeasure{parse_measure(text.substr(colon + 1)), Rounding::Multinomial}};
  if (kind == "explicit") {
    ExplicitSequence seq;
    std::size_t start = colon + 1;
    while (start <= text.size()) {
      auto end = text.find(';', start);
      if (end == std::string::npos) end = text.size();
      PileSizes piles;
      for (double x : parse_numbers(text.substr(0, end), start)) {
        if (x < 0 || x != std::floor(x)) parse_fail(1, start + 1, "pile sizes must be nonnegative integers");
        piles.push_back(static_cast<std::size_t>(x));
      }
      seq.steps.push_back(piles);
      start = end + 1;
    }
    return {seq};
  }
  parse_fail(1, 1, "unknown process kind '" + kind + "'");
}

std::vector<std::pair<std::string, SimplexMeasure>> table1_measures() {
  return {
      {"beta_1_1", BetaMeasure{1, 1}},
      {"beta_half", BetaMeasure{0.5, 0.5}},
      {"beta_2_2", BetaMeasure{2, 2}},
      {"beta_2_16", BetaMeasure{2, 16}},
      {"uniform_quarter", UniformInterval{0.25, 0.75}},
      {"dirichlet_1_1_1", Dirichlet{{1, 1, 1}}},
      {"dirichlet_half", Dirichlet{{0.5, 0.5, 0.5}}},
      {"dirichlet_2_2_2", Dirichlet{{2, 2, 2}}},
      {"dirichlet_1_1_1_1", Dirichlet{{1, 1, 1, 1}}},
      {"point_uniform_2", PointMass{{0.5, 0.5}}},
  };
}

json to_json(const SimplexMeasure& mu) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return {{"type", "point"}, {"p", m.p}};
        } else if constexpr (std::is_same_v<T, FiniteMixture>) {
          return {{"type", "mixture"}, {"weights", m.weights}, {"atoms", m.atoms}};
        } else if constexpr (std::is_same_v<T, BetaMeasure>) {
          return {{"type", "beta"}, {"a", m.a}, {"b", m.b}};
        } else if constexpr (std::is_same_v<T, Dirichlet>) {
          return {{"type", "dirichlet"}, {"alpha", m.alpha}};
        } else if constexpr (std::is_same_v<T, UniformInterval>) {
          return {{"type", "uniform_interval"}, {"lo", m.lo}, {"hi", m.hi}};
        } else {
          return {{"type", "empirical"}, {"samples", m.samples}};
        }
      },
      mu);
}

json to_json(const CutProcess& process) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ExplicitSequence>) {
          return {{"type", "explicit"}, {"piles", r.steps}};
        } else if constexpr (std::is_same_v<T, IIDMultinomial>) {
          return {{"type", "multinomial"}, {"p", r.p}};
        } else if constexpr (std::is_same_v<T, IIDFromMeasure>) {
          return {{"type", "measure"},
                  {"measure", to_json(r.mu)},
                  {"rounding", r.rounding == Rounding::Multinomial ? "multinomial" : "largest_remainder"}};
        } else if constexpr (std::is_same_v<T, UniformCut>) {
          return {{"type", "uniform_cut"}};
        } else if constexpr (std::is_same_v<T, ExactBisection>) {
          return {{"type", "bisection"}};
        } else if constexpr (std::is_same_v<T, FixedFraction>) {
          return {{"type", "fixed_fraction"}, {"q", r.q}};
        } else {
          json cycle = json::array();
          for (const auto& c : r.cycle) cycle.push_back(to_json(c));
          return {{"type", "periodic"}, {"cycle", cycle}};
        }
      },
      process.rule);
}

json to_json(const ConstantsBundle& b) {
  return {{"theta", finite_or_null(b.theta)},
          {"psi2", finite_or_null(b.psi2)},
          {"C", finite_or_null(b.C)},
          {"C_tilde", finite_or_null(b.C_tilde)},
          {"C_bar", finite_or_null(b.C_bar)},
          {"psi_theta", finite_or_null(b.psi_theta)},
          {"self_check_rel", finite_or_null(b.self_check_rel)},
          {"psi2_se", b.psi2_se},
          {"degenerate", b.degenerate},
          {"method", b.method_note}};
}

json to_json(const TvBoundReport& r) {
  return {{"N", r.N},
          {"K", r.K},
          {"statistic", r.statistic},
          {"direction", r.direction > 0 ? ">=" : "<="},
          {"threshold", r.threshold},
          {"samples", r.samples},
          {"pilot_samples", r.pilot_samples},
          {"p_shuffled", r.p_shuffled},
          {"p_uniform", r.p_uniform},
          {"estimate", r.estimate},
          {"ci_lo", r.ci.lo},
          {"ci_hi", r.ci.hi},
          {"lower_bound", r.lower_bound}};
}

json to_json(const ColdSpotSet& H) {
  json intervals = json::array();
  for (const auto& [a, b] : H.intervals) intervals.push_back({a, b});
  return {{"N", H.N},
          {"size", H.size},
          {"boundary", H.boundary},
          {"prefix_length", H.prefix_length},
          {"prefix_total", H.prefix_total},
          {"prefix_count", H.prefix_count},
          {"subsampled", H.subsampled},
          {"info_sum", H.info_sum},
          {"size_ok", H.size_ok},
          {"boundary_ok", H.boundary_ok},
          {"intervals", intervals.size()},
          {"delta", H.params.delta},
          {"chi", H.params.chi}};
}

json to_json(const PsiConstants& c) {
  return {{"theta", c.theta}, {"C", c.C}, {"C_tilde", c.C_tilde}, {"C_bar", c.C_bar}};
}

json to_json(const NonconvexityReport& r) {
  return {{"eta", r.eta},
          {"C_bar_f", r.f.C_bar},
          {"C_bar_f_breve", r.f_breve.C_bar},
          {"C_bar_f_hat", r.f_hat.C_bar},
          {"theta_f_hat", r.f_hat.theta},
          {"f_hat_at_2", r.f_hat_at_2},
          {"f_hat_at_3_5", r.f_hat_at_3_5},
          {"predicted_f_hat_at_3_5", r.predicted_f_hat_at_3_5},
          {"gap", r.gap},
          {"success", r.success},
          {"message", r.message}};
}

json to_json(const ConcentrationRow& r) {
  return {{"n1", r.n1},         {"n", r.n},           {"m", r.m},
          {"mean", r.mean},     {"threshold", r.threshold}, {"trials", r.trials},
          {"hits", r.hits},     {"frequency", r.frequency}, {"ci_lo", r.ci_lo},
          {"ci_hi", r.ci_hi},   {"exact_tail", r.exact_tail}, {"bound", r.hush_scovel},
          {"c_hat", finite_or_null(r.c_hat)}};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  fail(ErrorCode::InvalidArgument, "format must be csv or json");
}

std::string render(const json& config, const std::vector<std::string>& columns, const json& rows, Format format) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
  const json meta = {{"version", kVersion}, {"config_hash", hash.str()}};
  if (format == Format::Json) {
    return json{{"config", config}, {"results", rows}, {"meta", meta}}.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "# config " << config.dump() << "\n";
  os << "# meta " << meta.dump() << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << ",";
      if (row.contains(columns[c])) os << csv_cell(row[columns[c]]);
    }
    os << "\n";
  }
  return os.str();
}

json error_json(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {{"error", to_string(err->code())}, {"message", err->what()}};
  return {{"error", "Internal"}, {"message", e.what()}};
}

}  // namespace riffle::io
