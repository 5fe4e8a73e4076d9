#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "riffle/cold_spots.hpp"
#include "riffle/constants.hpp"
#include "riffle/error.hpp"
#include "riffle/exact.hpp"
#include "riffle/io.hpp"
#include "riffle/parallel.hpp"
#include "riffle/psi_class.hpp"
#include "riffle/shuffle.hpp"
#include "riffle/statistics.hpp"

using namespace riffle;
using io::json;

namespace {

struct Common {
  std::string measure;
  std::string process;
  std::vector<std::size_t> N;
  std::vector<std::size_t> K;
  std::string kgrid;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::string out;
  std::string format = "csv";
  unsigned threads = 1;
};

void emit(const Common& c, const json& config, const std::vector<std::string>& columns, const json& rows) {
  const auto text = io::render(config, columns, rows, io::parse_format(c.format));
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + c.out);
  f << text;
  if (!f) fail(ErrorCode::IoError, "write failed: " + c.out);
}

std::size_t single(const std::vector<std::size_t>& v, const char* name) {
  if (v.size() != 1) fail(ErrorCode::InvalidArgument, std::string("exactly one value of ") + name + " expected");
  return v[0];
}

// a:b:step, inclusive of b up to rounding
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "bad grid value '" + item + "' in " + text);
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
    fail(ErrorCode::ParseError, "grid must be lo:hi:step with step > 0");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  return grid;
}

// the cut measure a process follows, when it has one
std::optional<SimplexMeasure> measure_of(const CutProcess& p) {
  if (std::holds_alternative<UniformCut>(p.rule)) return BetaMeasure{1, 1};
  if (std::holds_alternative<ExactBisection>(p.rule)) return PointMass{{0.5, 0.5}};
  if (const auto* m = std::get_if<IIDMultinomial>(&p.rule)) return PointMass{m->p};
  if (const auto* m = std::get_if<IIDFromMeasure>(&p.rule)) return m->mu;
  if (const auto* m = std::get_if<FixedFraction>(&p.rule)) return PointMass{m->q};
  return std::nullopt;
}

CutProcess process_for(const Common& c) {
  if (!c.process.empty()) return io::parse_process(c.process);
  if (c.measure.empty()) fail(ErrorCode::InvalidArgument, "--process or --measure required");
  if (c.measure == "uniform_cut") return {UniformCut{}};
  if (c.measure == "gsr") return gsr_process();
  return {IIDFromMeasure{io::parse_measure(c.measure), Rounding::Multinomial}};
}

PrecisionConfig precision(const Common& c, std::size_t nodes, std::size_t mc) {
  PrecisionConfig cfg;
  cfg.quadrature_nodes = nodes;
  cfg.mc_samples = mc;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

json base_config(const std::string& command, const Common& c) {
  return {{"command", command}, {"seed", c.seed}, {"format", c.format}};
}

void cmd_constants(const Common& c, bool table1, std::size_t nodes, std::size_t mc) {
  auto cfg = precision(c, nodes, mc);
  std::vector<std::pair<std::string, SimplexMeasure>> list;
  if (table1) {
    list = io::table1_measures();
  } else {
    if (c.measure.empty()) fail(ErrorCode::InvalidArgument, "--measure or --table1 required");
    list.push_back({c.measure, io::parse_measure(c.measure)});
  }
  json rows = json::array();
  json measures = json::array();
  for (const auto& [name, mu] : list) {
    json row = io::to_json(constants_bundle(mu, cfg));
    row["measure"] = describe(mu);
    row["k"] = dimension(mu);
    rows.push_back(row);
    measures.push_back(io::to_json(mu));
  }
  json config = base_config("constants", c);
  config["measures"] = measures;
  config["quadrature_nodes"] = nodes;
  config["mc_samples"] = mc;
  emit(c, config, {"measure", "k", "theta", "psi2", "C", "C_tilde", "C_bar", "self_check_rel", "psi2_se"}, rows);
}

void cmd_simulate(const Common& c, bool summary) {
  const auto process = process_for(c);
  const std::size_t N = single(c.N, "-N"), K = single(c.K, "-K");
  if (N < 1) fail(ErrorCode::InvalidArgument, "N must be positive");
  std::vector<Permutation> decks(c.samples);
  const Stream base(c.seed, 0x5111);
  ChunkLayout layout{c.samples, 16};
  for_each_chunk(layout.chunks(), c.threads, [&](std::size_t ch) {
    for (std::size_t i = layout.begin(ch); i < layout.end(ch); ++i)
      decks[i] = shuffle_K(identity_permutation(N), process, K, base.split(i));
  });
  json rows = json::array();
  for (std::size_t i = 0; i < decks.size(); ++i) {
    json row = {{"sample", i},
                {"rising_sequences", rising_sequences(decks[i])},
                {"longest_run", longest_increasing_run_of_deck(decks[i])}};
    if (!summary) row["deck"] = to_string(decks[i]);
    rows.push_back(row);
  }
  json config = base_config("simulate", c);
  config["process"] = io::to_json(process);
  config["N"] = N;
  config["K"] = K;
  config["samples"] = c.samples;
  std::vector<std::string> cols = {"sample", "rising_sequences", "longest_run"};
  if (!summary) cols.push_back("deck");
  emit(c, config, cols, rows);
}

StatisticSpec statistic_of(const std::string& name) {
  StatisticSpec s;
  s.kind = parse_statistic(name);
  if (s.kind == StatisticKind::ColdSpotAscents)
    fail(ErrorCode::InvalidArgument, "use the coldspot command for the cold-spot statistic");
  return s;
}

void cmd_tvd(const Common& c, bool exact, const std::string& statistic, std::size_t pilot) {
  const auto process = process_for(c);
  const std::size_t N = single(c.N, "-N");
  if (c.K.empty()) fail(ErrorCode::InvalidArgument, "-K required");
  const bool use_exact = exact || N <= 7;
  json rows = json::array();
  for (std::size_t K : c.K) {
    if (use_exact) {
      const auto tv = exact_tv(exact_shuffle_distribution(N, process, K));
      rows.push_back({{"N", N}, {"K", K}, {"method", "exact"}, {"tv", tv.approx}, {"tv_exact", tv.value.str()}});
    } else {
      McOptions opt;
      opt.samples = c.samples;
      opt.pilot_samples = pilot;
      opt.seed = c.seed;
      opt.threads = c.threads;
      json row = io::to_json(tv_lower_bound_mc(process, N, K, statistic_of(statistic), opt));
      row["method"] = "monte_carlo";
      rows.push_back(row);
    }
  }
  json config = base_config("tvd", c);
  config["process"] = io::to_json(process);
  config["N"] = N;
  config["K"] = c.K;
  config["exact"] = use_exact;
  if (!use_exact) {
    config["samples"] = c.samples;
    config["pilot_samples"] = pilot;
    config["statistic"] = statistic;
  }
  if (use_exact)
    emit(c, config, {"N", "K", "method", "tv", "tv_exact"}, rows);
  else
    emit(c, config,
         {"N", "K", "method", "statistic", "direction", "threshold", "p_shuffled", "p_uniform", "estimate", "ci_lo",
          "ci_hi", "lower_bound"},
         rows);
}

void cmd_scan(const Common& c, const std::string& statistic, std::size_t pilot, std::size_t nodes, std::size_t mc) {
  const auto process = process_for(c);
  if (c.N.empty()) fail(ErrorCode::InvalidArgument, "-N required");
  if (c.kgrid.empty()) fail(ErrorCode::InvalidArgument, "--kgrid required");
  const auto grid = parse_grid(c.kgrid);
  std::optional<SimplexMeasure> mu;
  if (!c.measure.empty())
    mu = c.measure == "uniform_cut" ? SimplexMeasure{BetaMeasure{1, 1}} : io::parse_measure(c.measure);
  else
    mu = measure_of(process);
  double C_bar = std::nan("");
  if (mu) C_bar = constants_bundle(*mu, precision(c, nodes, mc)).C_bar;
  McOptions opt;
  opt.samples = c.samples;
  opt.pilot_samples = pilot;
  opt.seed = c.seed;
  opt.threads = c.threads;
  json rows = json::array();
  for (const auto& r : cutoff_scan(process, C_bar, c.N, grid, statistic_of(statistic), opt)) {
    rows.push_back({{"N", r.N},
                    {"K", r.K},
                    {"multiple", r.multiple},
                    {"K_over_logN", r.K_over_logN},
                    {"C_bar", std::isfinite(r.C_bar) ? json(r.C_bar) : json(nullptr)},
                    {"statistic", r.bound.statistic},
                    {"estimate", r.bound.estimate},
                    {"ci_lo", r.bound.ci.lo},
                    {"ci_hi", r.bound.ci.hi},
                    {"lower_bound", r.bound.lower_bound},
                    {"exact_tv", r.exact_tv ? json(*r.exact_tv) : json(nullptr)}});
  }
  json config = base_config("scan", c);
  config["process"] = io::to_json(process);
  if (mu) config["measure"] = io::to_json(*mu);
  config["N"] = c.N;
  config["kgrid"] = grid;
  config["samples"] = c.samples;
  config["pilot_samples"] = pilot;
  config["statistic"] = statistic;
  emit(c, config,
       {"N", "K", "multiple", "K_over_logN", "C_bar", "statistic", "estimate", "ci_lo", "ci_hi", "lower_bound",
        "exact_tv"},
       rows);
}

void cmd_coldspot(const Common& c, const ColdSpotParams& base_params, std::size_t nodes, std::size_t mc) {
  if (c.measure.empty()) fail(ErrorCode::InvalidArgument, "--measure required");
  const auto mu = io::parse_measure(c.measure);
  const auto process = c.process.empty() ? CutProcess{IIDFromMeasure{mu, Rounding::Multinomial}} : io::parse_process(c.process);
  const std::size_t N = single(c.N, "-N"), K = single(c.K, "-K");
  const auto cfg = precision(c, nodes, mc);
  ColdSpotParams params = base_params;
  params.seed = c.seed;
  const double theta = constants_bundle(mu, cfg).theta;
  const auto mixture = discretize_measure(mu, params.chi, cfg);
  const Stream base(c.seed, 0xC01D);
  const auto piles = pile_sequence(process, N, K, base.split(0));
  const auto H = build_cold_spots(piles, mixture, theta, params);

  // rejection rates: decks shuffled along the same pile sequence, and uniform decks
  std::vector<double> shuffled(c.samples), uniform(c.samples);
  ChunkLayout layout{c.samples, 4};
  for_each_chunk(layout.chunks(), c.threads, [&](std::size_t ch) {
    for (std::size_t i = layout.begin(ch); i < layout.end(ch); ++i) {
      shuffled[i] = cold_spot_test(sample_sigma_given_piles(piles, base.split(1).split(i)), H, params.delta).reject;
      Permutation sigma = identity_permutation(N);
      Stream s = base.split(2).split(i);
      shuffle_range(sigma.begin(), sigma.end(), s);
      uniform[i] = cold_spot_test(sigma, H, params.delta).reject;
    }
  });
  double rs = 0, ru = 0;
  for (std::size_t i = 0; i < c.samples; ++i) {
    rs += shuffled[i];
    ru += uniform[i];
  }
  json row = io::to_json(H);
  row["K"] = K;
  row["theta"] = theta;
  row["threshold"] = cold_spot_threshold(H, params.delta);
  row["trials"] = c.samples;
  row["reject_shuffled"] = c.samples ? rs / static_cast<double>(c.samples) : 0.0;
  row["reject_uniform"] = c.samples ? ru / static_cast<double>(c.samples) : 0.0;
  json config = base_config("coldspot", c);
  config["measure"] = io::to_json(mu);
  config["process"] = io::to_json(process);
  config["N"] = N;
  config["K"] = K;
  config["samples"] = c.samples;
  config["delta"] = params.delta;
  config["chi"] = params.chi;
  config["rho"] = params.rho;
  emit(c, config,
       {"N", "K", "theta", "size", "boundary", "prefix_length", "prefix_total", "prefix_count", "size_ok",
        "boundary_ok", "threshold", "trials", "reject_shuffled", "reject_uniform"},
       json::array({row}));
}

void cmd_nonconvex(const Common& c, const std::vector<double>& etas) {
  json rows = json::array();
  for (double eta : etas) rows.push_back(io::to_json(verify_nonconvexity(eta)));
  json config = base_config("nonconvex", c);
  config["eta"] = etas;
  for (const auto& r : rows) std::cerr << "eta " << r["eta"].get<double>() << ": " << (r["success"].get<bool>() ? "success" : "no gap") << "\n";
  emit(c, config,
       {"eta", "C_bar_f", "C_bar_f_breve", "C_bar_f_hat", "theta_f_hat", "f_hat_at_2", "f_hat_at_3_5",
        "predicted_f_hat_at_3_5", "gap", "success"},
       rows);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed");
  sub->add_option("--out", c.out, "output file (default stdout)");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riffle shuffle mixing experiments"};
  app.require_subcommand(1);
  Common c;
  bool table1 = false, exact = false, summary = false;
  std::size_t nodes = 256, mc = 1000000, pilot = 1000;
  std::string statistic = "longest_run";
  std::vector<double> etas = {0.005, 0.01, 0.02, 0.04};
  ColdSpotParams cs;

  auto* constants = app.add_subcommand("constants", "mixing constants of a cut measure");
  constants->add_option("--measure", c.measure, "measure (JSON, shorthand or built-in name)");
  constants->add_flag("--table1", table1, "all ten reference measures");
  constants->add_option("--nodes", nodes, "quadrature nodes");
  constants->add_option("--mc-samples", mc, "Monte-Carlo samples for Dirichlet measures");
  add_common(constants, c);

  auto* simulate = app.add_subcommand("simulate", "forward riffle shuffles of the identity deck");
  simulate->add_option("--process", c.process, "cut process")->required();
  simulate->add_option("-N", c.N, "deck size")->required();
  simulate->add_option("-K", c.K, "number of shuffles")->required();
  simulate->add_option("--samples", c.samples, "decks to sample");
  simulate->add_flag("--summary", summary, "omit the decks");
  add_common(simulate, c);

  auto* tvd = app.add_subcommand("tvd", "total variation to uniform, exact for N <= 7");
  tvd->add_option("--process", c.process, "cut process");
  tvd->add_option("--measure", c.measure, "cut measure (used when --process is absent)");
  tvd->add_option("-N", c.N, "deck size")->required();
  tvd->add_option("-K", c.K, "shuffle counts")->required()->delimiter(',');
  tvd->add_flag("--exact", exact, "exact law (N <= 8)");
  tvd->add_option("--samples", c.samples, "Monte-Carlo samples per law");
  tvd->add_option("--pilot", pilot, "pilot samples for the event");
  tvd->add_option("--statistic", statistic, "longest_run or rising_sequences");
  add_common(tvd, c);

  auto* scan = app.add_subcommand("scan", "TV lower bounds over K = multiple * log N");
  scan->add_option("--process", c.process, "cut process");
  scan->add_option("--measure", c.measure, "cut measure");
  scan->add_option("-N", c.N, "deck sizes")->required()->delimiter(',');
  scan->add_option("--kgrid", c.kgrid, "lo:hi:step multiples of log N")->required();
  scan->add_option("--samples", c.samples, "Monte-Carlo samples per law");
  scan->add_option("--pilot", pilot, "pilot samples for the event");
  scan->add_option("--statistic", statistic, "longest_run or rising_sequences");
  scan->add_option("--nodes", nodes, "quadrature nodes");
  scan->add_option("--mc-samples", mc, "Monte-Carlo samples for Dirichlet measures");
  add_common(scan, c);

  auto* coldspot = app.add_subcommand("coldspot", "build a cold-spot set and run the ascent test");
  coldspot->add_option("--measure", c.measure, "cut measure")->required();
  coldspot->add_option("--process", c.process, "cut process (default: i.i.d. from the measure)");
  coldspot->add_option("-N", c.N, "deck size")->required();
  coldspot->add_option("-K", c.K, "number of shuffles")->required();
  coldspot->add_option("--samples", c.samples, "test trials");
  coldspot->add_option("--delta", cs.delta, "test exponent");
  coldspot->add_option("--chi", cs.chi, "cell resolution");
  coldspot->add_option("--rho", cs.rho, "window parameter");
  coldspot->add_option("--prefix-cap", cs.prefix_cap, "largest prefix count before subsampling");
  coldspot->add_option("--nodes", nodes, "quadrature nodes");
  coldspot->add_option("--mc-samples", mc, "Monte-Carlo samples");
  add_common(coldspot, c);

  auto* nonconvex = app.add_subcommand("nonconvex", "check the non-convexity counterexample");
  nonconvex->add_option("--eta", etas, "eta values")->delimiter(',');
  add_common(nonconvex, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "ParseError"}, {"message", e.what()}}.dump() << "\n";
    return e.get_exit_code();
  }

  try {
    if (*constants) cmd_constants(c, table1, nodes, mc);
    if (*simulate) cmd_simulate(c, summary);
    if (*tvd) cmd_tvd(c, exact, statistic, pilot);
    if (*scan) cmd_scan(c, statistic, pilot, nodes, mc);
    if (*coldspot) cmd_coldspot(c, cs, nodes, mc);
    if (*nonconvex) cmd_nonconvex(c, etas);
  } catch (const std::exception& e) {
    std::cerr << io::error_json(e).dump() << "\n";
    return 1;
  }
  return 0;
}
