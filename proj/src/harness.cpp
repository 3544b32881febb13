#include "proxnet/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "proxnet/data.hpp"
#include "proxnet/oracle.hpp"
#include "proxnet/rng.hpp"

#ifndef PROXNET_PRESET_DIR
#define PROXNET_PRESET_DIR "presets"
#endif

namespace proxnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  // Top-level commas only: "unified:A=W,B=I-W,C=W" must survive, so a
  // unified spec is kept whole once it starts.
  std::string acc;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!acc.empty() && item.find('=') != std::string::npos && item.rfind("unified:", 0) != 0) {
      acc += "," + item;
      continue;
    }
    if (!acc.empty()) out.push_back(acc), acc.clear();
    if (item.rfind("unified:", 0) == 0) {
      acc = item;
    } else if (!item.empty()) {
      out.push_back(item);
    }
  }
  if (!acc.empty()) out.push_back(acc);
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t pos = 0;
    if (auto slash = t.find('/'); slash != std::string::npos) {
      const double num = std::stod(t.substr(0, slash), &pos);
      if (pos != trim(t.substr(0, slash)).size()) throw std::invalid_argument("");
      const std::string den_s = trim(t.substr(slash + 1));
      const double den = std::stod(den_s, &pos);
      if (pos != den_s.size() || den == 0.0) throw std::invalid_argument("");
      return num / den;
    }
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not an integer");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = {
      "run.algorithm",        "run.K",
      "run.gamma",            "run.seed",
      "run.seeds",            "run.eval_every",
      "run.batch_size",       "run.threads",
      "run.init",             "run.init_scale",
      "run.init_seed",        "stepsize.values",
      "stepsize.durations",   "network.topology",
      "network.n",            "network.weights",
      "network.edges_file",   "problem.loss",
      "problem.hidden",       "problem.quadratic_file",
      "problem.quadratic_dim", "problem.quadratic_seed",
      "problem.quadratic_samples", "problem.quadratic_noise",
      "regularizer.kind",     "regularizer.nu",
      "regularizer.nu1",      "regularizer.nu2",
      "regularizer.lo",       "regularizer.hi",
      "dataset.kind",         "dataset.dir",
      "dataset.images",       "dataset.labels",
      "dataset.digits",       "dataset.N",
      "dataset.d",            "dataset.margin",
      "dataset.seed",         "output.dir"};
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "run.algorithm") {
    algorithms = split_list(v);
    for (const auto& a : algorithms) AlgorithmSpec::parse(a);
  } else if (key == "run.K") {
    iterations = parse_int(key, v);
  } else if (key == "run.gamma") {
    gamma = parse_number(key, v);
  } else if (key == "run.seed") {
    seed = static_cast<std::uint64_t>(parse_int(key, v));
  } else if (key == "run.seeds") {
    seeds = static_cast<int>(parse_int(key, v));
  } else if (key == "run.eval_every") {
    eval_every = parse_int(key, v);
  } else if (key == "run.batch_size") {
    batch_size = parse_int(key, v);
  } else if (key == "run.threads") {
    threads = static_cast<int>(parse_int(key, v));
  } else if (key == "run.init") {
    init = v;
  } else if (key == "run.init_scale") {
    init_scale = parse_number(key, v);
  } else if (key == "run.init_seed") {
    init_seed = static_cast<std::uint64_t>(parse_int(key, v));
  } else if (key == "stepsize.values") {
    stepsizes.clear();
    for (const auto& s : split_list(v)) stepsizes.push_back(parse_number(key, s));
  } else if (key == "stepsize.durations") {
    durations.clear();
    for (const auto& s : split_list(v)) durations.push_back(parse_int(key, s));
  } else if (key == "network.topology") {
    topology = v;
  } else if (key == "network.n") {
    agents = parse_int(key, v);
  } else if (key == "network.weights") {
    weights = v;
  } else if (key == "network.edges_file") {
    edges_file = v;
  } else if (key == "problem.loss") {
    loss = v;
  } else if (key == "problem.hidden") {
    hidden = parse_int(key, v);
  } else if (key == "problem.quadratic_file") {
    quadratic_file = v;
  } else if (key == "problem.quadratic_dim") {
    quadratic_dim = parse_int(key, v);
  } else if (key == "problem.quadratic_seed") {
    quadratic_seed = static_cast<std::uint64_t>(parse_int(key, v));
  } else if (key == "problem.quadratic_samples") {
    quadratic_samples = parse_int(key, v);
  } else if (key == "problem.quadratic_noise") {
    quadratic_noise = parse_number(key, v);
  } else if (key == "regularizer.kind") {
    reg_kind = v;
  } else if (key == "regularizer.nu") {
    nu = parse_number(key, v);
  } else if (key == "regularizer.nu1") {
    nu1 = parse_number(key, v);
  } else if (key == "regularizer.nu2") {
    nu2 = parse_number(key, v);
  } else if (key == "regularizer.lo") {
    lo = parse_number(key, v);
  } else if (key == "regularizer.hi") {
    hi = parse_number(key, v);
  } else if (key == "dataset.kind") {
    dataset = v;
  } else if (key == "dataset.dir") {
    data_dir = v;
  } else if (key == "dataset.images") {
    images = v;
  } else if (key == "dataset.labels") {
    labels = v;
  } else if (key == "dataset.digits") {
    const auto parts = split_list(v);
    if (parts.size() != 2) throw ConfigError("config key 'dataset.digits' needs two digits");
    pos_digit = static_cast<int>(parse_int(key, parts[0]));
    neg_digit = static_cast<int>(parse_int(key, parts[1]));
  } else if (key == "dataset.N") {
    synthetic_samples = parse_int(key, v);
  } else if (key == "dataset.d") {
    synthetic_dim = parse_int(key, v);
  } else if (key == "dataset.margin") {
    margin = parse_number(key, v);
  } else if (key == "dataset.seed") {
    data_seed = static_cast<std::uint64_t>(parse_int(key, v));
  } else if (key == "output.dir") {
    out_dir = v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("run.algorithm: no algorithm given");
  for (const auto& a : algorithms) AlgorithmSpec::parse(a);
  if (iterations < 0) throw ConfigError("run.K must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("run.gamma must be > 0");
  if (seeds < 1) throw ConfigError("run.seeds must be >= 1");
  if (eval_every < 1) throw ConfigError("run.eval_every must be >= 1");
  if (batch_size < 0) throw ConfigError("run.batch_size must be >= 0 (0 = exact gradients)");
  if (init != "zero" && init != "gaussian") throw ConfigError("run.init must be zero or gaussian");
  if (stepsizes.empty()) throw ConfigError("stepsize.values: need at least one value");
  for (double a : stepsizes)
    if (!(a >= 0.0)) throw ConfigError("stepsize.values must be nonnegative");
  if (!durations.empty()) {
    if (durations.size() != stepsizes.size()) {
      throw ConfigError("stepsize.durations must have one entry per stepsize");
    }
    std::int64_t sum = 0;
    for (auto d : durations) {
      if (d <= 0) throw ConfigError("stepsize.durations must be positive");
      sum += d;
    }
    if (sum != iterations) {
      throw ConfigError("stepsize.durations sum to " + std::to_string(sum) + " but run.K is " +
                        std::to_string(iterations));
    }
  }
  if (loss != "tanh" && loss != "mlp" && loss != "quadratic") {
    throw ConfigError("problem.loss must be tanh, mlp or quadratic, got '" + loss + "'");
  }
  if (reg_kind != "l1" && reg_kind != "elastic_net" && reg_kind != "box" && reg_kind != "none") {
    throw ConfigError("regularizer.kind must be l1, elastic_net, box or none, got '" + reg_kind + "'");
  }
  if (dataset != "synthetic" && dataset != "mnist") {
    throw ConfigError("dataset.kind must be synthetic or mnist, got '" + dataset + "'");
  }
  if (agents < 1) throw ConfigError("network.n must be >= 1");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  o << "run.algorithm=";
  for (std::size_t i = 0; i < algorithms.size(); ++i) o << (i ? ";" : "") << algorithms[i];
  o << "\nrun.K=" << iterations << "\nrun.gamma=" << fmt(gamma) << "\nrun.seed=" << seed
    << "\nrun.seeds=" << seeds << "\nrun.eval_every=" << eval_every
    << "\nrun.batch_size=" << batch_size << "\nrun.init=" << init
    << "\nrun.init_scale=" << fmt(init_scale) << "\nrun.init_seed=" << init_seed
    << "\nstepsize.values=";
  for (std::size_t i = 0; i < stepsizes.size(); ++i) o << (i ? ";" : "") << fmt(stepsizes[i]);
  o << "\nstepsize.durations=";
  for (std::size_t i = 0; i < durations.size(); ++i) o << (i ? ";" : "") << durations[i];
  o << "\nnetwork.topology=" << topology << "\nnetwork.n=" << agents
    << "\nnetwork.weights=" << weights << "\nnetwork.edges_file=" << edges_file
    << "\nproblem.loss=" << loss << "\nproblem.hidden=" << hidden
    << "\nproblem.quadratic_file=" << quadratic_file << "\nproblem.quadratic_dim=" << quadratic_dim
    << "\nproblem.quadratic_seed=" << quadratic_seed
    << "\nproblem.quadratic_samples=" << quadratic_samples
    << "\nproblem.quadratic_noise=" << fmt(quadratic_noise) << "\nregularizer.kind=" << reg_kind
    << "\nregularizer.nu=" << fmt(nu) << "\nregularizer.nu1=" << fmt(nu1)
    << "\nregularizer.nu2=" << fmt(nu2) << "\nregularizer.lo=" << fmt(lo)
    << "\nregularizer.hi=" << fmt(hi) << "\ndataset.kind=" << dataset
    << "\ndataset.images=" << images << "\ndataset.labels=" << labels
    << "\ndataset.digits=" << pos_digit << ";" << neg_digit << "\ndataset.N=" << synthetic_samples
    << "\ndataset.d=" << synthetic_dim << "\ndataset.margin=" << fmt(margin)
    << "\ndataset.seed=" << data_seed << "\n";
  return o.str();
}

std::string ExperimentConfig::hash() const {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::from_stream(std::istream& in, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(origin + ": key '" + section + "' must live inside a [section]");
    }
    for (const auto& [name, value] : body) {
      try {
        cfg.set(section + "." + name, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
      }
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return from_stream(in, path);
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("PROXNET_PRESET_DIR"); env && *env) return env;
  return PROXNET_PRESET_DIR;
}

std::vector<std::string> list_presets() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(preset_dir(), ec)) {
    if (entry.path().extension() == ".cfg") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

ExperimentConfig load_preset(const std::string& name) {
  const auto path = preset_dir() / (name + ".cfg");
  if (!std::filesystem::exists(path)) {
    std::string valid;
    for (const auto& n : list_presets()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + valid + ")");
  }
  return ExperimentConfig::from_file(path.string());
}

// --- experiment assembly -------------------------------------------------------

namespace {

Dataset load_dataset(const ExperimentConfig& c) {
  if (c.dataset == "synthetic") {
    return synthetic_binary(c.synthetic_samples, c.synthetic_dim, c.data_seed, c.margin);
  }
  std::filesystem::path root = c.data_dir;
  if (root.empty()) {
    const char* env = std::getenv("PROXNET_DATA_DIR");
    root = (env && *env) ? env : ".";
  }
  const auto images = root / c.images;
  const auto labels = root / c.labels;
  if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
    throw DataError("MNIST files not found; expected '" + images.string() + "' and '" +
                    labels.string() + "' (set PROXNET_DATA_DIR or dataset.dir)");
  }
  return load_mnist(images.string(), labels.string());
}

ProxOperator make_regularizer(const ExperimentConfig& c) {
  if (c.reg_kind == "l1") return ProxOperator::l1(c.nu);
  if (c.reg_kind == "elastic_net") return ProxOperator::elastic_net(c.nu1, c.nu2);
  if (c.reg_kind == "box") return ProxOperator::box(c.lo, c.hi);
  return ProxOperator::zero();
}

std::vector<ObjectivePtr> make_agents(const ExperimentConfig& c, Index n) {
  std::vector<ObjectivePtr> agents;
  if (c.loss == "quadratic") {
    if (!c.quadratic_file.empty()) {
      auto q = load_quadratic(c.quadratic_file);
      agents.assign(n, q);
      return agents;
    }
    return make_quadratic_testbed(n, c.quadratic_dim, c.quadratic_seed, 1.0, 4.0, 1.0,
                                  c.quadratic_samples, c.quadratic_noise);
  }
  Dataset ds = load_dataset(c);
  if (c.loss == "tanh") {
    if (c.dataset == "mnist") ds = filter_binary(ds, c.pos_digit, c.neg_digit);
    const Partition part = partition_heterogeneous(ds, n);
    for (Index a = 0; a < n; ++a) {
      agents.push_back(std::make_shared<TanhLoss>(ds.subset(part.agent_indices[a])));
    }
    return agents;
  }
  // mlp: +-1 labels become classes {0, 1}.
  int max_label = 0;
  bool pm1 = true;
  for (int& y : ds.labels) {
    if (y != 1 && y != -1) pm1 = false;
  }
  if (pm1) {
    for (int& y : ds.labels) y = y > 0 ? 1 : 0;
  }
  for (int y : ds.labels) max_label = std::max(max_label, y);
  const MlpArch arch{ds.dim(), c.hidden, std::max(2, max_label + 1)};
  const Partition part = partition_heterogeneous(ds, n);
  for (Index a = 0; a < n; ++a) {
    agents.push_back(std::make_shared<MlpLoss>(ds.subset(part.agent_indices[a]), arch));
  }
  return agents;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  config.validate();
  Experiment ex;
  ex.config = config;

  Topology topo = config.edges_file.empty()
                      ? named_topology(config.topology, config.agents)
                      : load_edge_list(config.edges_file, config.agents);
  ex.mixing.emplace(named_weights(config.weights, topo));
  const Index n = ex.mixing->size();

  ex.problem.emplace(make_agents(config, n), make_regularizer(config), config.gamma);
  const double L = ex.problem->smoothness();
  if (!std::isnan(L)) {
    const double bound = gamma_safety_bound(L, ex.problem->rho());
    if (config.gamma > bound) {
      std::ostringstream w;
      w << "gamma=" << config.gamma << " exceeds the safety bound " << bound << " (L=" << L
        << ", rho=" << ex.problem->rho() << ")";
      ex.warnings.push_back(w.str());
    }
  }

  const Index p = ex.problem->dim();
  ex.z0 = Vector::Zero(p);
  if (config.init == "gaussian") {
    RngStream rng(hash_combine(config.init_seed, 0x1417ULL));
    for (Index j = 0; j < p; ++j) ex.z0[j] = config.init_scale * rng.normal();
  }
  return ex;
}

std::string file_stem(const std::string& algorithm) {
  std::string s;
  for (char ch : algorithm) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') {
      s += ch;
    } else if (!s.empty() && s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

std::vector<RunVariant> expand_grid(const Experiment& ex) {
  const auto& c = ex.config;
  StepsizeSchedule schedule;
  if (c.durations.empty()) {
    schedule = StepsizeSchedule::equal_stages(c.stepsizes, c.iterations);
  } else {
    std::vector<StepsizeSchedule::Stage> stages;
    for (std::size_t i = 0; i < c.durations.size(); ++i) stages.push_back({c.durations[i], c.stepsizes[i]});
    schedule = StepsizeSchedule(std::move(stages));
  }
  std::vector<RunVariant> grid;
  for (const auto& name : c.algorithms) {
    for (int s = 0; s < c.seeds; ++s) {
      RunVariant v;
      v.run.algorithm = AlgorithmSpec::parse(name);
      v.run.iterations = c.iterations;
      v.run.schedule = schedule;
      v.run.seed = c.seed + static_cast<std::uint64_t>(s);
      v.run.eval_every = c.eval_every;
      v.run.batch_size = c.batch_size;
      v.run.z0 = ex.z0;
      v.label = file_stem(name) + "_seed" + std::to_string(v.run.seed);
      grid.push_back(std::move(v));
    }
  }
  return grid;
}

// --- records -------------------------------------------------------------------

RunRecord aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw AggregationError("nothing to aggregate");
  const auto& first = records.front();
  for (const auto& r : records) {
    bool same = r.rows.size() == first.rows.size();
    for (std::size_t i = 0; same && i < r.rows.size(); ++i) {
      same = r.rows[i].iteration == first.rows[i].iteration;
    }
    if (!same) throw AggregationError("records have mismatched iteration grids");
  }
  RunRecord out;
  out.metadata = first.metadata;
  out.set_meta("aggregate", "mean");
  out.set_meta("runs", std::to_string(records.size()));
  const double inv = 1.0 / static_cast<double>(records.size());
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    MetricRow m;
    m.iteration = first.rows[i].iteration;
    for (const auto& r : records) {
      m.stationarity += r.rows[i].stationarity;
      m.consensus += r.rows[i].consensus;
      m.objective += r.rows[i].objective;
      m.seconds += r.rows[i].seconds;
    }
    m.stationarity *= inv;
    m.consensus *= inv;
    m.objective *= inv;
    m.seconds *= inv;
    out.rows.push_back(m);
  }
  return out;
}

void write_csv(const RunRecord& record, std::ostream& out) {
  for (const auto& [k, v] : record.metadata) out << "# " << k << "=" << v << "\n";
  if (record.abort_reason) out << "# aborted=" << *record.abort_reason << "\n";
  out << "iteration,stationarity,consensus,objective,seconds\n";
  for (const auto& r : record.rows) {
    out << r.iteration << "," << fmt(r.stationarity) << "," << fmt(r.consensus) << ","
        << fmt(r.objective) << "," << fmt(r.seconds) << "\n";
  }
}

void emit_csv(const RunRecord& record, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(record, out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RunRecord read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  RunRecord rec;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = body.substr(0, eq);
      if (key == "aborted") {
        rec.abort_reason = body.substr(eq + 1);
      } else {
        rec.metadata.emplace_back(key, body.substr(eq + 1));
      }
      continue;
    }
    if (!header) {
      if (trim(line) != "iteration,stationarity,consensus,objective,seconds") {
        throw FormatError(path.string() + ": unexpected CSV header '" + line + "'");
      }
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw FormatError(path.string() + ": malformed row '" + line + "'");
    MetricRow r;
    r.iteration = std::stoll(cells[0]);
    r.stationarity = std::stod(cells[1]);
    r.consensus = std::stod(cells[2]);
    r.objective = std::stod(cells[3]);
    r.seconds = std::stod(cells[4]);
    rec.rows.push_back(r);
  }
  if (!header) throw FormatError(path.string() + ": missing CSV header");
  return rec;
}

std::vector<RunRecord> run_experiment(const Experiment& ex, std::ostream& log) {
#ifdef _OPENMP
  if (ex.config.threads > 0) omp_set_num_threads(ex.config.threads);
#endif
  for (const auto& w : ex.warnings) log << "warning: " << w << "\n";
  const std::filesystem::path out_dir = ex.config.out_dir;
  const auto grid = expand_grid(ex);
  const std::string hash = ex.config.hash();

  std::vector<RunRecord> means;
  std::vector<RunRecord> group;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& v = grid[i];
    log << "running " << v.label << " (n=" << ex.mixing->size() << ", K=" << v.run.iterations
        << ", 1-lambda=" << ex.mixing->spectral_gap() << ")\n";
    RunRecord rec;
    try {
      rec = run(v.run, *ex.problem, *ex.mixing);
    } catch (const RunDiverged& e) {
      RunRecord partial = e.partial();
      partial.set_meta("config_hash", hash);
      partial.set_meta("version", kVersion);
      emit_csv(partial, out_dir / (v.label + ".csv"));
      throw;
    }
    rec.set_meta("config_hash", hash);
    rec.set_meta("version", kVersion);
    rec.set_meta("n", std::to_string(ex.mixing->size()));
    rec.set_meta("gamma", fmt(ex.config.gamma));
    rec.set_meta("spectral_gap", fmt(ex.mixing->spectral_gap()));
    emit_csv(rec, out_dir / (v.label + ".csv"));
    group.push_back(std::move(rec));

    const bool last_of_algo =
        i + 1 == grid.size() || grid[i + 1].run.algorithm.name() != v.run.algorithm.name();
    if (last_of_algo) {
      RunRecord mean = aggregate(group);
      mean.set_meta("seed", std::to_string(ex.config.seed) + "+" + std::to_string(ex.config.seeds));
      emit_csv(mean, out_dir / (file_stem(v.run.algorithm.name()) + "_mean.csv"));
      means.push_back(std::move(mean));
      group.clear();
    }
  }
  return means;
}

}  // namespace proxnet
