#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "cclab/amplify.hpp"
#include "cclab/certify.hpp"
#include "cclab/cli.hpp"
#include "cclab/derand.hpp"
#include "cclab/gapmaj.hpp"
#include "json.hpp"

namespace cclab {

using json = nlohmann::json;

// --- measurement ---------------------------------------------------------------

namespace {

Measurement measure_impl(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs, uint64_t trials,
                         double confidence, uint64_t seed, bool par) {
  if (trials < 1) throw DomainError("measure: trials must be >= 1");
  Measurement m;
  m.trials = trials;
  m.radius = hoeffding_radius(trials, confidence);
  uint64_t worst = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Output truth = f(inputs[i].first, inputs[i].second);
    uint64_t fails = 0, cost = 0;
    std::exception_ptr err;
    std::mutex mu;
#pragma omp parallel for reduction(+ : fails) reduction(max : cost) schedule(dynamic, 8) if (par)
    for (int64_t t = 0; t < static_cast<int64_t>(trials); ++t) {
      try {
        RunRecord r = execute(p, inputs[i].first, inputs[i].second,
                              seeded_tapes(p, derive_seed(seed, i, static_cast<uint64_t>(t))));
        fails += resolve(p.model, r, truth) ? 0 : 1;
        cost = std::max(cost, r.cost);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    m.max_cost = std::max(m.max_cost, cost);
    if (i == 0 || fails > worst) {
      worst = fails;
      m.worst_input = i;
    }
  }
  m.error = static_cast<double>(worst) / static_cast<double>(trials);
  return m;
}

}  // namespace

Measurement measure(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs, uint64_t trials,
                    double confidence, uint64_t seed) {
  return measure_impl(p, f, inputs, trials, confidence, seed, true);
}

Measurement measure_serial(const Protocol& p, const Truth& f, const std::vector<InputPair>& inputs,
                           uint64_t trials, double confidence, uint64_t seed) {
  return measure_impl(p, f, inputs, trials, confidence, seed, false);
}

// --- config --------------------------------------------------------------------

namespace {

mpq_class rational_of(const json& v, const std::string& key) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_number()) {
    s = v.dump();
  } else {
    throw ConfigError(key + ": expected a number or \"p/q\"");
  }
  try {
    if (s.find('/') != std::string::npos) {
      mpq_class q(s, 10);
      q.canonicalize();
      return q;
    }
    if (s.find_first_of("eE") != std::string::npos) return mpq_class(std::stod(s));
    const auto dot = s.find('.');
    if (dot == std::string::npos) return mpq_class(mpz_class(s, 10));
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, s.size() - dot - 1);
    mpq_class q(mpz_class(s.substr(0, dot) + s.substr(dot + 1), 10), den);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw ConfigError(key + ": not a rational: " + s);
  }
}

void apply_defaults(ExperimentConfig& c) {
  const auto& e = c.experiment;
  auto dflt = [](auto& field, auto v) {
    using T = std::remove_reference_t<decltype(field)>;
    if (field == T(0)) field = static_cast<T>(v);
  };
  if (e == "separations") {
    dflt(c.n, size_t{8});
  } else if (e == "gapmaj-bench") {
    dflt(c.N, size_t{64});
    dflt(c.k, size_t{16});
    if (c.eps == 0) c.eps = mpq_class(3, 10);
    if (c.eps_target == 0) c.eps_target = mpq_class(1, 20);
    dflt(c.trials, uint64_t{200});
  } else if (e == "amplify") {
    if (c.scheme.empty()) c.scheme = "xor";
    if (c.ks.empty()) c.ks = {16, 64};
    if (c.eps == 0) c.eps = mpq_class(2, 5);
    if (c.eps_target == 0) c.eps_target = mpq_class(1, 20);
    dflt(c.trials, uint64_t{500});
    dflt(c.inputs, uint64_t{4});
    if (c.problem.empty()) c.problem = "IdA";
    if (c.model.empty()) c.model = "alice";
  } else if (e == "derand") {
    if (c.model.empty()) c.model = "all";
    dflt(c.count, uint64_t{20});
  } else if (e == "certify") {
    dflt(c.n, size_t{4});
    if (c.ks.empty()) c.ks = {4, 5, 6};
    if (c.eps == 0) c.eps = mpq_class(1, 4);
    dflt(c.trials, uint64_t{200});
  } else {
    throw ConfigError("unknown experiment: " + e);
  }
}

ExperimentConfig config_of(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (auto& [key, v] : j.items()) {
    try {
      if (key == "experiment") c.experiment = v.get<std::string>();
      else if (key == "problem") c.problem = v.get<std::string>();
      else if (key == "model") c.model = v.get<std::string>();
      else if (key == "scheme") c.scheme = v.get<std::string>();
      else if (key == "n") c.n = v.get<size_t>();
      else if (key == "t") c.t = v.get<size_t>();
      else if (key == "N") c.N = v.get<size_t>();
      else if (key == "k") c.k = v.get<size_t>();
      else if (key == "ks") c.ks = v.get<std::vector<size_t>>();
      else if (key == "eps") c.eps = rational_of(v, key);
      else if (key == "eps_target") c.eps_target = rational_of(v, key);
      else if (key == "delta") c.delta = rational_of(v, key);
      else if (key == "trials") c.trials = v.get<uint64_t>();
      else if (key == "count") c.count = v.get<uint64_t>();
      else if (key == "inputs") c.inputs = v.get<uint64_t>();
      else if (key == "flip_bits") c.flip_bits = v.get<unsigned>();
      else if (key == "confidence") c.confidence = v.get<double>();
      else if (key == "seed") c.seed = v.get<uint64_t>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "format") c.format = v.get<std::string>();
      else throw ConfigError("unknown key: " + key);
    } catch (const json::exception& ex) {
      throw ConfigError(key + ": " + ex.what());
    }
  }
  if (c.experiment.empty()) throw ConfigError("missing key: experiment");
  if (!(c.confidence > 0 && c.confidence < 1)) throw ConfigError("confidence must be in (0, 1)");
  if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
  apply_defaults(c);
  return c;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("invalid JSON: ") + ex.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) { return config_of(parse_json(text)); }

std::vector<ExperimentConfig> parse_suite(const std::string& text) {
  json j = parse_json(text);
  std::vector<ExperimentConfig> out;
  if (j.is_object() && j.contains("suite")) {
    if (j.size() != 1 || !j["suite"].is_array()) throw ConfigError("suite: expected {\"suite\": [...]}");
    for (auto& e : j["suite"]) out.push_back(config_of(e));
  } else {
    out.push_back(config_of(j));
  }
  if (out.empty()) throw ConfigError("suite: no experiments");
  return out;
}

std::vector<std::string> scheme_names() { return {"standard", "xor", "split", "oot", "direct_sum"}; }

// --- pipelines -----------------------------------------------------------------

namespace {

const Model kModels[] = {Model::Open,        Model::Local, Model::Alice, Model::Bob,
                         Model::OneOutOfTwo, Model::Split, Model::Xor};

std::string padded(uint64_t i, int w = 3) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<size_t>(w) ? w - s.size() : 0, '0') + s;
}

std::vector<InputPair> sample_inputs(size_t na, size_t nb, uint64_t count, uint64_t seed) {
  std::vector<InputPair> v;
  for (uint64_t i = 0; i < count; ++i) {
    Tape t = Tape::seeded(derive_seed(seed, 0x1f, i), na + nb);
    BitString x = t.read(na);
    BitString y = t.read(nb);
    v.emplace_back(std::move(x), std::move(y));
  }
  return v;
}

double mpq_d(const mpq_class& q) { return q.get_d(); }

Report separations(const ExperimentConfig& c) {
  Report r;
  const size_t n = c.n;
  struct Sep {
    const char* name;
    Model model;
    uint64_t bound;
  };
  const Sep seps[] = {{"XOR", Model::Xor, 0},
                      {"SplitId", Model::Split, 0},
                      {"IdA", Model::Alice, 0},
                      {"IdB", Model::Bob, 0},
                      {"CondId", Model::OneOutOfTwo, 2}};
  for (auto& s : seps) {
    ProblemSpec spec = problems::by_name(s.name, n);
    const auto dom = spec.domain();
    ProtocolPtr p = separation_protocol(s.name, n, 0.25);
    ErrorReport e = exact_error(*p, spec.truth(), dom);
    Measurement m = measure(*p, spec.truth(), dom, 1, c.confidence, c.seed);
    ReportRow row;
    row.case_id = std::string("sep:") + s.name + ":n" + std::to_string(n);
    row.model = model_name(s.model);
    row.scheme = "zero_comm";
    row.cost = static_cast<double>(m.max_cost);
    row.cost_bound = static_cast<double>(s.bound);
    row.error_exact = e.exact_value;
    row.error = mpq_d(e.exact_value);
    row.pass = m.max_cost <= s.bound && e.exact_value == 0;
    r.rows.push_back(std::move(row));

    // The same problem under every model with the deterministic catalog.
    for (Model md : kModels) {
      ProtocolPtr q = deterministic_protocol(spec, md);
      Truth tr = model_truth(spec, md);
      ErrorReport eq = exact_error(*q, tr, dom);
      Measurement mq = measure(*q, tr, dom, 1, c.confidence, c.seed);
      ReportRow cr;
      cr.case_id = std::string("det:") + s.name + ":" + model_name(md) + ":n" + std::to_string(n);
      cr.model = model_name(md);
      cr.scheme = "catalog";
      cr.cost = static_cast<double>(mq.max_cost);
      cr.cost_bound = static_cast<double>(q->max_cost);
      cr.error_exact = eq.exact_value;
      cr.error = mpq_d(eq.exact_value);
      cr.pass = mq.max_cost <= q->max_cost && eq.exact_value == 0;
      r.rows.push_back(std::move(cr));
    }
  }
  return r;
}

Report gapmaj_bench(const ExperimentConfig& c) {
  const TrivialVariant vars[] = {TrivialVariant::XorPub, TrivialVariant::XorPriv, TrivialVariant::OpenPub,
                                 TrivialVariant::OpenPriv, TrivialVariant::DetUni};
  const size_t V = std::size(vars) + 1;
  const double et = mpq_d(c.eps_target);
  std::vector<std::vector<uint64_t>> fails(V, std::vector<uint64_t>(c.trials, 0)), cost = fails;
  std::vector<uint64_t> declared(V, 0);
  for (size_t v = 0; v < std::size(vars); ++v)
    declared[v] = gapmaj_trivial_protocol(c.N, c.k, {}, c.eps, vars[v])->max_cost;
  declared[V - 1] = gapmaj_randomgraph_protocol(c.N, c.k, et)->max_cost;
  std::exception_ptr err;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < static_cast<int64_t>(c.trials); ++i) {
    try {
      GapMajInstance inst = random_gapmaj(c.N, c.k, c.eps, derive_seed(c.seed, 0x6a, i), i % 2 == 1);
      for (size_t v = 0; v < V; ++v) {
        const uint64_t s = derive_seed(c.seed, i, v);
        SolveResult res = v + 1 < V ? solve_trivial(inst, vars[v], s) : solve_randomgraph(inst, et, s);
        fails[v][i] = !res.correct;
        cost[v][i] = res.record.cost;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  Report r;
  const double radius = hoeffding_radius(c.trials, c.confidence);
  for (size_t v = 0; v < V; ++v) {
    const std::string name = v + 1 < V ? variant_name(vars[v]) : "randomgraph";
    uint64_t f = 0, mc = 0;
    for (uint64_t i = 0; i < c.trials; ++i) {
      f += fails[v][i];
      mc = std::max(mc, cost[v][i]);
    }
    // The one-row samplers err with probability ≤ ε; det_uni is exact.
    const double target = name == "det_uni" ? 0 : name == "randomgraph" ? et : mpq_d(c.eps);
    ReportRow row;
    row.case_id = "gapmaj:" + name + ":N" + std::to_string(c.N) + ":k" + std::to_string(c.k);
    row.model = model_name(name == "det_uni" ? Model::Bob : name.rfind("open", 0) == 0 ? Model::Open : Model::Xor);
    row.scheme = name;
    row.cost = static_cast<double>(mc);
    row.cost_bound = static_cast<double>(declared[v]);
    row.error = static_cast<double>(f) / static_cast<double>(c.trials);
    row.error_radius = radius;
    row.pass = mc <= declared[v] && row.error <= target + radius;
    row.extra["target"] = decimal_str(target);
    r.rows.push_back(std::move(row));
  }
  return r;
}

uint64_t dyadic_flips(const mpq_class& eps, unsigned bits) {
  mpq_class v = eps * mpq_class(mpz_class(1) << bits);
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
  return f.get_ui();
}

Report amplify_exp(const ExperimentConfig& c) {
  Report r;
  const double eps = mpq_d(c.eps), et = mpq_d(c.eps_target);
  const std::string& sc = c.scheme;
  const unsigned fb = c.flip_bits ? c.flip_bits : sc == "direct_sum" ? 6 : 4;
  const uint64_t flips = dyadic_flips(c.eps, fb);
  for (size_t k : c.ks) {
    AmplifyPlan plan;
    ProtocolPtr amp;
    ProblemSpec spec;
    if (sc == "xor") {
      spec = problems::xor_n(k);
      amp = amplify_xor(corrupted(separation_protocol("XOR", k, eps), fb, flips), eps, et, &plan);
    } else if (sc == "split") {
      spec = problems::splitid(k);
      amp = amplify_split(corrupted(separation_protocol("SplitId", k, eps), fb, flips), eps, et, &plan);
    } else if (sc == "oot") {
      spec = problems::condid(k);
      amp = amplify_oot(corrupted(separation_protocol("CondId", k, eps), fb, flips), eps, et, &plan);
    } else if (sc == "direct_sum") {
      spec = problems::xor_n(k);
      auto pf = corrupted(separation_protocol("XOR", k, eps), fb, flips);
      auto pg = corrupted(separation_protocol("XOR", 1, eps), fb, flips);
      amp = amplify_xor_direct_sum(pf, pg, k, eps, et, &plan);
    } else if (sc == "standard") {
      spec = problems::by_name(c.problem, k, c.t);
      Model m = parse_model(c.model);
      amp = amplify_standard(corrupted(deterministic_protocol(spec, m), fb, flips), eps, et, &plan);
    } else {
      throw ConfigError("unknown scheme: " + sc);
    }
    auto inputs = sample_inputs(spec.n_a, spec.n_b, c.inputs, derive_seed(c.seed, k));
    Measurement m = measure(*amp, spec.truth(), inputs, c.trials, c.confidence, derive_seed(c.seed, 0xa3, k));
    ReportRow row;
    row.case_id = "amp:" + sc + ":k" + padded(k);
    row.model = model_name(amp->model);
    row.scheme = sc;
    row.cost = static_cast<double>(m.max_cost);
    row.cost_bound = static_cast<double>(amp->max_cost);
    row.error = m.error;
    row.error_radius = m.radius;
    row.pass = m.max_cost <= amp->max_cost && m.error <= et + m.radius;
    row.extra["repetitions"] = std::to_string(plan.repetitions);
    row.extra["secondary_repetitions"] = std::to_string(plan.secondary_repetitions);
    row.extra["base_cost"] = std::to_string(plan.base_cost);
    row.extra["overhead"] = std::to_string(plan.overhead);
    row.extra["ledger_total"] = rational_str(plan.ledger_total());
    row.extra["base_error"] = rational_str(mpq_class(static_cast<unsigned long>(flips), 1ul << fb));
    r.rows.push_back(std::move(row));
  }
  return r;
}

Report derand_exp(const ExperimentConfig& c) {
  std::vector<Model> models;
  if (c.model == "all")
    models.assign(std::begin(kModels), std::end(kModels));
  else
    models.push_back(parse_model(c.model));
  Report r;
  for (size_t mi = 0; mi < models.size(); ++mi) {
    const Model m = models[mi];
    std::vector<ReportRow> rows(c.count);
    std::exception_ptr err;
    std::mutex mu;
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t i = 0; i < static_cast<int64_t>(c.count); ++i) {
      try {
        RandomProtocolSpec s;
        s.model = m;
        s.k = 1 + static_cast<size_t>(i) % 3;
        RandomProtocol rp = random_private_protocol(s, derive_seed(c.seed, static_cast<uint64_t>(m), i));
        DerandResult d = derand(rp.protocol, rp.eps, m);
        ErrorReport e = exact_error(*d.protocol, rp.truth_fn(), rp.inputs);
        uint64_t mc = 0;
        for (auto& [x, y] : rp.inputs) mc = std::max(mc, execute(*d.protocol, x, y, Tapes{}).cost);
        ReportRow row;
        row.case_id = std::string("derand:") + model_name(m) + ":" + padded(i);
        row.model = model_name(m);
        row.scheme = d.path;
        row.cost = static_cast<double>(mc);
        row.cost_bound = d.ceiling;
        row.error_exact = e.exact_value;
        row.error = mpq_d(e.exact_value);
        row.pass = e.exact_value == 0 && static_cast<double>(d.protocol->max_cost) <= d.ceiling &&
                   mc <= d.protocol->max_cost;
        row.extra["input_error"] = rational_str(rp.eps);
        row.extra["leaves"] = std::to_string(d.table->leaves.size());
        row.extra["R"] = std::to_string(d.R);
        if (m == Model::Xor) {
          bool promise = true;
          uint64_t M = 0;
          const mpq_class need = mpq_class(1) - derand_gap(rp.eps);
          for (size_t xi = 0; xi < d.table->xs.size(); ++xi)
            for (size_t yi = 0; yi < d.table->ys.size(); ++yi) {
              DerandRows rows_xy = derand_rows(*d.table, xi, yi, rp.eps);
              M = rows_xy.rows();
              auto w = rows_xy.value_weights();
              const BitString& z = rp.truth[xi * d.table->ys.size() + yi].value;
              if (!w.count(z) || w.at(z) < need) promise = false;
            }
          row.extra["promise"] = promise ? "1" : "0";
          row.extra["rows_M"] = std::to_string(M);
          row.pass = row.pass && promise;
        }
        rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    for (auto& row : rows) r.rows.push_back(std::move(row));
  }
  return r;
}

Report certify_exp(const ExperimentConfig& c) {
  Report r;
  for (auto& rr : rank_catalog(c.n)) {
    ReportRow row;
    row.case_id = "rank:" + rr.problem + ":" + model_name(rr.model) + ":n" + std::to_string(rr.n);
    row.model = model_name(rr.model);
    row.scheme = "rank_certificate";
    // cost = certified lower bound, cost_bound = measured catalog cost.
    row.cost = std::max(0.0, rr.bound);
    row.cost_bound = static_cast<double>(rr.cost);
    row.error_exact = rr.exact ? mpq_class(0) : mpq_class(1);
    row.error = rr.exact ? 0 : 1;
    row.pass = rr.bound <= static_cast<double>(rr.cost) && rr.exact;
    row.extra["rank"] = std::to_string(rr.rank);
    r.rows.push_back(std::move(row));
  }
  const double eps = mpq_d(c.eps);
  for (size_t n : c.ks) {
    ProblemSpec spec = problems::eqout(n);
    Certificate cert = xi_certificate(spec, diagonal_uniform(spec), c.eps);
    ProtocolPtr open = convert(separation_protocol("EQout", n, eps), Model::Open, &spec);
    auto inputs = sample_inputs(n, n, 4, derive_seed(c.seed, n));
    for (size_t i = 0; i < 2; ++i) inputs[i].second = inputs[i].first;
    Measurement m = measure(*open, spec.truth(), inputs, c.trials, c.confidence, derive_seed(c.seed, 0x51, n));
    ReportRow row;
    row.case_id = "xi:EQout:n" + padded(n, 2);
    row.model = model_name(Model::Open);
    row.scheme = "xi_certificate";
    row.cost = cert.bits;
    row.cost_bound = static_cast<double>(m.max_cost);
    row.error = m.error;
    row.error_radius = m.radius;
    row.pass = cert.bits >= static_cast<double>(n) - 1 && cert.bits <= static_cast<double>(m.max_cost) &&
               m.error <= eps + m.radius;
    row.extra["xi_minus_1"] = rational_str(cert.value);
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace

Report run_experiment(const ExperimentConfig& c) {
  Report r;
  try {
    if (c.experiment == "separations") r = separations(c);
    else if (c.experiment == "gapmaj-bench") r = gapmaj_bench(c);
    else if (c.experiment == "amplify") r = amplify_exp(c);
    else if (c.experiment == "derand") r = derand_exp(c);
    else if (c.experiment == "certify") r = certify_exp(c);
    else throw ConfigError("unknown experiment: " + c.experiment);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const WrongModel& e) {
    throw ConfigError(e.what());
  }
  r.experiment = c.experiment;
  r.seed = c.seed;
  r.sort_rows();
  return r;
}

Report run_suite(const std::vector<ExperimentConfig>& cs) {
  if (cs.size() == 1) return run_experiment(cs[0]);
  Report all;
  all.experiment = "suite";
  all.seed = cs.empty() ? 0 : cs[0].seed;
  for (auto& c : cs) {
    Report r = run_experiment(c);
    for (auto& row : r.rows) all.rows.push_back(std::move(row));
  }
  all.sort_rows();
  return all;
}

}  // namespace cclab
