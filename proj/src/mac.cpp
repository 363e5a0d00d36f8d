#include "machash/mac.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "machash/util.hpp"

namespace machash {

const char* to_string(ZSolver s) { return s == ZSolver::cut ? "cut" : "quad"; }

ZSolver parse_solver(const std::string& name) {
  if (name == "cut") return ZSolver::cut;
  if (name == "quad") return ZSolver::quad;
  throw std::invalid_argument("unknown Z-step solver '" + name + "' (expected cut or quad)");
}

double default_mu1(ZSolver s) { return s == ZSolver::cut ? 0.3 : 0.01; }

void validate(const MacConfig& cfg) {
  if (!(cfg.mu1 > 0)) throw std::invalid_argument("mu1 must be > 0");
  if (!(cfg.alpha > 1)) throw std::invalid_argument("alpha must be > 1");
  if (cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  if (cfg.zstep_maxit < 1) throw std::invalid_argument("zstep_maxit must be >= 1");
  if (cfg.free_code_sweeps < 0) throw std::invalid_argument("free_code_sweeps must be >= 0");
  if (!(cfg.classifier.C > 0)) throw std::invalid_argument("classifier C must be > 0");
}

CodeMatrix initial_codes(const FeatureMatrix& x, int bits, InitKind kind, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  CodeMatrix z(bits, n);
  std::mt19937_64 rng(seed);
  if (kind == InitKind::random) {
    std::bernoulli_distribution coin;
    for (int i = 0; i < bits; ++i)
      for (std::size_t p = 0; p < n; ++p) z.set(i, p, coin(rng) ? 1 : -1);
    return z;
  }
  const FeatureMatrix centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto d = cov.rows();
  Eigen::MatrixXd dirs(d, bits);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < bits; ++i) {
    if (i < d)
      dirs.col(i) = es.eigenvectors().col(d - 1 - i);  // descending variance
    else
      for (Eigen::Index r = 0; r < d; ++r) dirs(r, i) = gauss(rng);
  }
  const Eigen::MatrixXd proj = centered * dirs;
  for (int i = 0; i < bits; ++i)
    for (std::size_t p = 0; p < n; ++p) z.set(i, p, sign_of(proj(static_cast<Eigen::Index>(p), i)));
  return z;
}

MacContext::MacContext(FeatureMatrix x, LossSpec spec, AffinityGraph g, FeatureMap map, MacConfig cfg,
                       Blocks blocks)
    : x_(std::move(x)), spec_(spec), g_(std::move(g)), map_(std::move(map)), cfg_(cfg), blocks_(std::move(blocks)) {
  validate(spec_);
  validate(cfg_);
  validate(g_);
  if (g_.points != static_cast<std::size_t>(x_.rows()))
    throw std::invalid_argument("affinity graph and features disagree on N");
  phi_ = map_.apply(x_);
  if (cfg_.solver == ZSolver::cut && blocks_.members.empty()) blocks_ = blocks_from_affinities(g_);
  pattern_ = make_pair_pattern(g_);
}

CodeMatrix MacContext::zstep_cycle(const CodeMatrix& z, const CodeMatrix& h_codes, double mu,
                                   const ZStepObserver& observer) const {
  if (cfg_.solver == ZSolver::cut) return zstep_cut(spec_, z, g_, h_codes, mu, blocks_, 1, observer, pattern_);
  return zstep_quad(spec_, z, g_, h_codes, mu, cfg_.quad, observer, pattern_).z;
}

CodeMatrix MacContext::zstep(const CodeMatrix& z, const CodeMatrix& h_codes, double mu, int maxit,
                             std::vector<double>* objectives) const {
  CodeMatrix cur = z;
  if (objectives) objectives->push_back(penalty_objective(spec_, cur, g_, h_codes, mu));
  for (int it = 0; it < maxit; ++it) {
    CodeMatrix next = zstep_cycle(cur, h_codes, mu);
    const bool changed = !(next == cur);
    cur = std::move(next);
    if (objectives) objectives->push_back(penalty_objective(spec_, cur, g_, h_codes, mu));
    if (!changed) break;
  }
  return cur;
}

HashModel MacContext::fit(const CodeMatrix& z) const {
  HashModel h;
  h.map = map_;
  h.weights.resize(z.bits(), phi_.cols());
  h.bias.resize(z.bits());
  for (int bit = 0; bit < z.bits(); ++bit)
    h.set_classifier(bit, train_bit_classifier(phi_, z.row(bit), cfg_.classifier, cfg_.classifier_seed));
  return h;
}

HashModel MacContext::refit(const CodeMatrix& z, const HashModel& current) const {
  const CodeMatrix pred = hash_apply_mapped(current, phi_);
  HashModel h = current;
  for (int bit = 0; bit < z.bits(); ++bit) {
    bool exact = true;
    for (std::size_t n = 0; n < z.points() && exact; ++n) exact = pred.at(bit, n) == z.at(bit, n);
    if (!exact)
      h.set_classifier(bit, train_bit_classifier(phi_, z.row(bit), cfg_.classifier, cfg_.classifier_seed));
  }
  return h;
}

CodeMatrix MacContext::codes(const HashModel& h) const { return hash_apply_mapped(h, phi_); }

CodeMatrix free_codes(const LossSpec& spec, const AffinityGraph& g, const CodeMatrix& init, ZSolver solver,
                      int sweeps, const Blocks& blocks, const QuadConfig& quad) {
  if (init.points() != g.points) throw std::invalid_argument("initial codes and graph disagree on N");
  if (sweeps <= 0) return init;
  if (solver == ZSolver::cut) {
    const Blocks b = blocks.members.empty() ? blocks_from_affinities(g) : blocks;
    return zstep_cut(spec, init, g, init, 0.0, b, sweeps);
  }
  CodeMatrix z = init;
  for (int s = 0; s < sweeps; ++s) {
    auto step = zstep_quad(spec, z, g, z, 0.0, quad);
    const bool changed = !(step.z == z);
    z = std::move(step.z);
    if (!changed) break;
  }
  return z;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TraceRow make_row(const MacContext& ctx, int iter, double mu, const CodeMatrix& z, const CodeMatrix& hx,
                  double val, bool accepted) {
  TraceRow row;
  row.iter = iter;
  row.mu = mu;
  row.loss = ctx.loss(hx);
  row.ez = ctx.loss(z);
  row.violations = hamming_total(z, hx);
  row.penalty = mu * 4.0 * static_cast<double>(row.violations);
  row.val_precision = val;
  row.accepted = accepted;
  return row;
}

}  // namespace

TwoStepResult two_step(const MacContext& ctx, const ValidationFn& validation) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config();
  const CodeMatrix init = initial_codes(ctx.features(), ctx.spec().bits, cfg.init, cfg.init_seed);
  TwoStepResult res;
  res.free = free_codes(ctx.spec(), ctx.graph(), init, cfg.solver, cfg.free_code_sweeps, ctx.blocks(), cfg.quad);
  res.model = ctx.fit(res.free);
  const double val = validation ? validation(res.model) : std::numeric_limits<double>::quiet_NaN();
  res.trace.push_back(make_row(ctx, 0, 0.0, res.free, ctx.codes(res.model), val, true));
  if (cfg.record_time) res.trace.back().seconds = seconds_since(t0);
  return res;
}

std::vector<double> default_mu_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(1e-3 * std::ldexp(1.0, k));
  return grid;
}

double estimate_mu1(const MacContext& ctx, const CodeMatrix& z0, const CodeMatrix& h_codes,
                    const std::vector<double>& grid) {
  const auto probes = grid.empty() ? default_mu_grid() : grid;
  for (double mu : probes)
    if (!(ctx.zstep_cycle(z0, h_codes, mu) == z0)) return mu;
  warn("no probe value of mu changed the codes; using the largest probe");
  return probes.back();
}

MacStep mac_iteration(const MacContext& ctx, const MacState& state, double mu) {
  MacStep step;
  const CodeMatrix hx = ctx.codes(state.model);
  CodeMatrix z = ctx.zstep(state.z, hx, mu, ctx.config().zstep_maxit, &step.objectives);
  if (z == hx) {
    step.constraints_met = true;
    step.state = {state.model, std::move(z)};
    return step;
  }
  step.state.model = ctx.refit(z, state.model);
  step.state.z = std::move(z);
  return step;
}

MacResult mac_optimize(const MacContext& ctx, const ValidationFn& validation, const TwoStepResult* initializer) {
  const auto& cfg = ctx.config();
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<TwoStepResult> own;
  if (!initializer) {
    own = two_step(ctx, validation);
    initializer = &*own;
  }
  const bool gate = cfg.validation_gate && static_cast<bool>(validation);
  if (cfg.validation_gate && !validation) warn("validation gate requested without a validation set; gate disabled");

  MacResult res;
  res.trace = initializer->trace;
  MacState state{initializer->model, initializer->free};
  double accepted_precision = gate ? initializer->trace.front().val_precision : 0.0;

  for (int i = 1; i <= cfg.max_iterations; ++i) {
    const double mu = cfg.mu1 * std::pow(cfg.alpha, i - 1);
    res.last_mu = mu;
    MacStep step = mac_iteration(ctx, state, mu);
    res.inner_objectives.push_back(step.objectives);
    const CodeMatrix hx = ctx.codes(step.state.model);
    double val = std::numeric_limits<double>::quiet_NaN();
    bool accept = true;
    if (validation) {
      val = validation(step.state.model);
      if (gate && val < accepted_precision) accept = false;
    }
    res.trace.push_back(make_row(ctx, i, mu, step.state.z, hx, val, accept));
    if (cfg.record_time) res.trace.back().seconds = seconds_since(t0);
    if (!accept) continue;
    state = std::move(step.state);
    if (gate) accepted_precision = val;
    if (step.constraints_met) {
      res.constraints_met = true;
      break;
    }
  }
  res.model = state.model;
  res.z = state.z;
  res.codes = ctx.codes(state.model);
  return res;
}

std::string trace_to_csv(const MacTrace& t) {
  std::ostringstream out;
  out << "iter,mu,loss,EZ,penalty,violations,val_precision,accepted,seconds\n";
  char buf[256];
  for (const auto& r : t) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%zu,%.17g,%d,%.17g\n", r.iter, r.mu, r.loss, r.ez,
                  r.penalty, r.violations, r.val_precision, r.accepted ? 1 : 0, r.seconds);
    out << buf;
  }
  return out.str();
}

MacTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "iter,mu,loss,EZ,penalty,violations,val_precision,accepted,seconds")
    throw std::invalid_argument("trace CSV has an unexpected header");
  MacTrace t;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string c[9];
    for (auto& cell : c)
      if (!std::getline(cells, cell, ',')) throw std::invalid_argument("trace row " + std::to_string(row_no) + " is short");
    TraceRow r;
    r.iter = std::stoi(c[0]);
    r.mu = std::strtod(c[1].c_str(), nullptr);
    r.loss = std::strtod(c[2].c_str(), nullptr);
    r.ez = std::strtod(c[3].c_str(), nullptr);
    r.penalty = std::strtod(c[4].c_str(), nullptr);
    r.violations = std::stoull(c[5]);
    r.val_precision = std::strtod(c[6].c_str(), nullptr);
    r.accepted = c[7] == "1";
    r.seconds = std::strtod(c[8].c_str(), nullptr);
    t.push_back(r);
  }
  return t;
}

void emit_trace(const MacTrace& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << trace_to_csv(t);
}

MacTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return trace_from_csv(buf.str());
}

}  // namespace machash
