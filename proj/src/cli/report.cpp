#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cclab/cli.hpp"
#include "cclab/problems.hpp"
#include "json.hpp"

namespace cclab {

using json = nlohmann::json;

std::string rational_str(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_str();
}

std::string decimal_str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool ReportRow::operator==(const ReportRow& o) const {
  return case_id == o.case_id && model == o.model && scheme == o.scheme && cost == o.cost &&
         cost_bound == o.cost_bound && error == o.error && error_exact == o.error_exact &&
         error_radius == o.error_radius && pass == o.pass && extra == o.extra;
}

bool Report::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

void Report::sort_rows() {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return a.case_id < b.case_id; });
}

bool Report::operator==(const Report& o) const {
  return experiment == o.experiment && seed == o.seed && rows == o.rows;
}

std::string render_csv(const Report& r) {
  std::ostringstream os;
  os << "case,model,scheme,cost,cost_bound,error,error_radius,pass\n";
  for (auto& row : r.rows) {
    os << row.case_id << ',' << row.model << ',' << row.scheme << ',' << decimal_str(row.cost) << ','
       << decimal_str(row.cost_bound) << ',' << (row.error_exact ? rational_str(*row.error_exact) : decimal_str(row.error))
       << ',' << decimal_str(row.error_radius) << ',' << (row.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string render_json(const Report& r) {
  json rows = json::array();
  for (auto& row : r.rows) {
    json j;
    j["case"] = row.case_id;
    j["model"] = row.model;
    j["scheme"] = row.scheme;
    j["cost"] = row.cost;
    j["cost_bound"] = row.cost_bound;
    j["error"] = row.error;
    j["error_exact"] = row.error_exact ? json(rational_str(*row.error_exact)) : json(nullptr);
    j["error_radius"] = row.error_radius;
    j["pass"] = row.pass;
    j["extra"] = row.extra;
    rows.push_back(std::move(j));
  }
  json out;
  out["experiment"] = r.experiment;
  out["seed"] = r.seed;
  out["all_pass"] = r.all_pass();
  out["rows"] = std::move(rows);
  return out.dump(2) + "\n";
}

Report parse_report_json(const std::string& text) {
  try {
    json j = json::parse(text);
    Report r;
    r.experiment = j.at("experiment").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    for (auto& jr : j.at("rows")) {
      ReportRow row;
      row.case_id = jr.at("case").get<std::string>();
      row.model = jr.at("model").get<std::string>();
      row.scheme = jr.at("scheme").get<std::string>();
      row.cost = jr.at("cost").get<double>();
      row.cost_bound = jr.at("cost_bound").get<double>();
      row.error = jr.at("error").get<double>();
      if (!jr.at("error_exact").is_null()) row.error_exact = mpq_class(jr.at("error_exact").get<std::string>(), 10);
      row.error_radius = jr.at("error_radius").get<double>();
      row.pass = jr.at("pass").get<bool>();
      row.extra = jr.at("extra").get<std::map<std::string, std::string>>();
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

void emit_report(const Report& r, const std::string& format, const std::string& path) {
  std::string text;
  if (format == "csv")
    text = render_csv(r);
  else if (format == "json")
    text = render_json(r);
  else
    throw ConfigError("format must be csv or json");
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!std::cout) throw IoError("write failed: stdout");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f << text;
  f.close();
  if (!f) throw IoError("write failed: " + path);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string selftest_config() {
  return R"({"suite": [
    {"experiment": "separations", "n": 4},
    {"experiment": "certify", "n": 3, "ks": [4], "trials": 100},
    {"experiment": "derand", "count": 3}
  ]})";
}

int run_and_emit(std::vector<ExperimentConfig> cs, std::optional<uint64_t> seed, uint64_t trials,
                 const std::string& out, const std::string& format) {
  for (auto& c : cs) {
    if (seed) c.seed = *seed;
    if (trials) c.trials = trials;
  }
  Report r = run_suite(cs);
  emit_report(r, format.empty() ? cs[0].format : format, out.empty() ? cs[0].out : out);
  return r.all_pass() ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Two-party protocol experiments"};
  app.require_subcommand(1);
  std::string config, out, format;
  uint64_t seed = 0, trials = 0;

  auto* run = app.add_subcommand("run", "Run the experiments in a JSON config");
  run->add_option("config", config, "Config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed override");
  run->add_option("--trials", trials, "Trials override");
  run->add_option("--out", out, "Report path (- for stdout)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* lp = app.add_subcommand("list-problems", "List problem names");
  auto* ls = app.add_subcommand("list-schemes", "List amplification schemes and experiments");
  auto* st = app.add_subcommand("selftest", "Run a small fixed suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (lp->parsed()) {
      for (auto& n : problems::names()) std::cout << n << '\n';
      return 0;
    }
    if (ls->parsed()) {
      for (auto& s : scheme_names()) std::cout << s << '\n';
      for (const char* e : {"separations", "gapmaj-bench", "amplify", "derand", "certify"})
        std::cout << "experiment:" << e << '\n';
      return 0;
    }
    if (st->parsed()) return run_and_emit(parse_suite(selftest_config()), std::nullopt, 0, "-", "csv");

    std::optional<uint64_t> s;
    if (seed_opt->count()) {
      s = seed;
    } else if (const char* env = std::getenv("CCLAB_SEED")) {
      try {
        s = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError("CCLAB_SEED is not an unsigned integer");
      }
    }
    return run_and_emit(parse_suite(read_file(config)), s, trials, out, format);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace cclab
