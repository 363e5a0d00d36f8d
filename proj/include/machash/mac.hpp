#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "machash/affinity.hpp"
#include "machash/codes.hpp"
#include "machash/dataset.hpp"
#include "machash/hstep.hpp"
#include "machash/loss.hpp"
#include "machash/zstep.hpp"

namespace machash {

enum class ZSolver { quad, cut };
enum class InitKind { pca, random };

const char* to_string(ZSolver s);
ZSolver parse_solver(const std::string& name);

/// Starting mu for each solver's schedule (0.3 for cut, 0.01 for quad).
double default_mu1(ZSolver s);

struct MacConfig {
  double mu1 = 0.3;
  double alpha = 1.4;
  int max_iterations = 40;
  ZSolver solver = ZSolver::cut;
  int zstep_maxit = 5;          // inner Z-step cycles per mu
  int free_code_sweeps = 10;    // Z-step cycles at mu = 0
  bool validation_gate = true;
  InitKind init = InitKind::pca;
  QuadConfig quad;
  ClassifierConfig classifier;
  std::uint64_t init_seed = 1;
  std::uint64_t classifier_seed = 2;
  bool record_time = false;     // wall time in the trace (breaks byte-identical reruns)
};

void validate(const MacConfig& cfg);

struct TraceRow {
  int iter = 0;
  double mu = 0.0;
  double loss = 0.0;         // L at the iteration's hash outputs h(X)
  double ez = 0.0;           // E(Z) at the iteration's codes
  double penalty = 0.0;      // mu * |Z - h(X)|^2
  std::size_t violations = 0;  // total Hamming distance between Z and h(X)
  double val_precision = 0.0;  // NaN when no validation is run
  bool accepted = true;
  double seconds = 0.0;
};

using MacTrace = std::vector<TraceRow>;

/// Thresholded projections on the top-b principal directions (random
/// Gaussian directions fill in past D), or random +-1 codes.
CodeMatrix initial_codes(const FeatureMatrix& x, int bits, InitKind kind, std::uint64_t seed);

/// Fixed inputs of one optimization: features, loss, affinities, hash
/// family and (for the cut solver) blocks.
class MacContext {
public:
  MacContext(FeatureMatrix x, LossSpec spec, AffinityGraph g, FeatureMap map, MacConfig cfg,
             Blocks blocks = {});

  const FeatureMatrix& features() const { return x_; }
  const LossSpec& spec() const { return spec_; }
  const AffinityGraph& graph() const { return g_; }
  const MacConfig& config() const { return cfg_; }
  const Blocks& blocks() const { return blocks_; }

  /// One cycle of the configured Z-step solver.
  CodeMatrix zstep_cycle(const CodeMatrix& z, const CodeMatrix& h_codes, double mu,
                         const ZStepObserver& observer = {}) const;
  /// Repeats cycles until Z stops changing or `maxit` cycles ran. When
  /// `objectives` is given it receives L_P before and after every cycle.
  CodeMatrix zstep(const CodeMatrix& z, const CodeMatrix& h_codes, double mu, int maxit,
                   std::vector<double>* objectives = nullptr) const;

  HashModel fit(const CodeMatrix& z) const;
  /// h step inside MAC: a bit whose classifier already reproduces its code
  /// row exactly is kept, every other bit is refit.
  HashModel refit(const CodeMatrix& z, const HashModel& current) const;
  CodeMatrix codes(const HashModel& h) const;

  double loss(const CodeMatrix& z) const { return total_loss(spec_, z, g_); }

private:
  FeatureMatrix x_;
  FeatureMatrix phi_;
  LossSpec spec_;
  AffinityGraph g_;
  FeatureMap map_;
  MacConfig cfg_;
  Blocks blocks_;
  std::shared_ptr<const PairPattern> pattern_;
};

/// Minimizes E(Z) with mu = 0 from `init`; E never increases.
CodeMatrix free_codes(const LossSpec& spec, const AffinityGraph& g, const CodeMatrix& init, ZSolver solver,
                      int sweeps, const Blocks& blocks = {}, const QuadConfig& quad = {});

using ValidationFn = std::function<double(const HashModel&)>;

struct TwoStepResult {
  HashModel model;
  CodeMatrix free;  // the free codes the model was fit to
  MacTrace trace;   // single row
};

/// Free codes (mu -> 0+) followed by fitting the hash function to them.
TwoStepResult two_step(const MacContext& ctx, const ValidationFn& validation = {});

/// Smallest mu on `grid` whose single Z-step cycle changes a bit of `z0`
/// given hash outputs `h_codes`; the grid maximum (with a warning) if none.
double estimate_mu1(const MacContext& ctx, const CodeMatrix& z0, const CodeMatrix& h_codes,
                    const std::vector<double>& grid = {});
std::vector<double> default_mu_grid();

struct MacState {
  HashModel model;
  CodeMatrix z;
};

struct MacStep {
  MacState state;            // candidate after the Z and h steps
  bool constraints_met = false;  // Z = h(X) after the Z step (h unchanged)
  std::vector<double> objectives;  // L_P across the inner Z-step cycles
};

/// One outer iteration at fixed mu: Z step against the current hash
/// outputs, stop test, then h step.
MacStep mac_iteration(const MacContext& ctx, const MacState& state, double mu);

struct MacResult {
  HashModel model;
  CodeMatrix codes;       // model outputs on the training features
  CodeMatrix z;           // auxiliary codes of the last accepted iterate
  MacTrace trace;         // row 0 is the two-step initializer
  std::vector<std::vector<double>> inner_objectives;  // per outer iteration
  bool constraints_met = false;
  double last_mu = 0.0;
};

/// Penalty schedule mu_i = mu1 alpha^(i-1) with alternating Z and h steps,
/// stopping once Z = h(X). With the validation gate, an iteration whose
/// validation precision falls below the last accepted one is discarded.
MacResult mac_optimize(const MacContext& ctx, const ValidationFn& validation = {},
                       const TwoStepResult* initializer = nullptr);

/// CSV with header iter,mu,loss,EZ,penalty,violations,val_precision,accepted,seconds.
std::string trace_to_csv(const MacTrace& t);
MacTrace trace_from_csv(const std::string& text);
void emit_trace(const MacTrace& t, const std::filesystem::path& path);
MacTrace load_trace(const std::filesystem::path& path);

}  // namespace machash
