#pragma once

#include "kgan/discriminator.hpp"
#include "kgan/errors.hpp"
#include "kgan/scenario.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace kgan {

enum class Engine { explicit_gda, eliminated, local };

Engine parse_engine(std::string_view name);
std::string_view engine_name(Engine e) noexcept;

// Points farther than this many kernel widths from every true point count as
// diverged.
constexpr double kDivergenceWidths = 1e6;

struct TrajectoryStep {
  long t = 0;
  Matrix points;
  double loss = 0.0;
  double disc_norm_sq = 0.0;
  double max_dist = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryStep> steps;
  bool diverged = false;
  long diverged_at = -1;
};

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out);

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long step, TrajectoryRecord partial = {})
      : NumericalError(what), step_(step), partial_(std::move(partial)) {}

  long step() const noexcept { return step_; }
  const TrajectoryRecord& partial() const noexcept { return partial_; }

 private:
  long step_;
  TrajectoryRecord partial_;
};

/// One simultaneous GDA step: the generator moves along the gradient of the
/// incoming f, then f is replaced by its regularized ascent update.
std::pair<DiscriminatorState, Matrix> step_explicit(const DiscriminatorState& f, const Matrix& Xt,
                                                    const Scenario& s);
// In-place form used by the engines.
void step_explicit_inplace(DiscriminatorState& f, Matrix& Xt, const Scenario& s, long t = 0);

/// Generator update with the discriminator eliminated, evaluated directly from
/// the iterate history X^0..X^t (f^0 = 0). Costs O(t) per call.
Matrix step_eliminated(const std::vector<Matrix>& history, const Scenario& s);

/// Full step restricted to true point `region` and its assigned generated
/// points. `Xt_i` holds those generated points in the order of
/// `part.members[region]`; `f_i` is the region's own discriminator.
std::pair<DiscriminatorState, Matrix> step_local(const DiscriminatorState& f_i, const Matrix& Xt_i,
                                                 int region, const Scenario& s,
                                                 const NeighborhoodPartition& part);

// Scenario containing only region `region`.
Scenario region_scenario(const Scenario& s, const NeighborhoodPartition& part, int region);

// max |grad_1 K(X~, X) p - grad_1 K(X~, X~) p~| over all coordinates.
double equilibrium_residual(const Matrix& Xt, const Scenario& s);

double loss_eval(const DiscriminatorState& f, const Matrix& Xt, const Scenario& s);

// (1/lambda)(sum_i p_i K(., x_i) - sum_j p~_j K(., x~_j)) with merged centers.
DiscriminatorState optimal_discriminator(const Scenario& s);

// max_j |x~_j - x_{assignment(j)}|.
double max_dist_to_assigned(const Matrix& Xt, const Scenario& s, const NeighborhoodPartition& part);

/// Steppable GDA run from f^0 = 0 (or a supplied f) and the scenario's
/// generated points.
class Simulator {
 public:
  Simulator(const Scenario& s, Engine engine, std::optional<DiscriminatorState> f0 = std::nullopt);
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  // Advances one step. Throws DivergenceError on a non-finite state or a
  // point beyond kDivergenceWidths widths from every true point.
  void step();

  long t() const noexcept { return t_; }
  const Matrix& points() const noexcept { return X_; }
  const Scenario& scenario() const noexcept { return s_; }
  const NeighborhoodPartition& partition() const noexcept { return part_; }
  double max_dist() const { return max_dist_to_assigned(X_, s_, part_); }

  // Current discriminator; assembled from the engine's internal
  // representation for the eliminated and local engines.
  DiscriminatorState discriminator() const;
  TrajectoryStep snapshot() const;

 private:
  struct Eliminated;

  Scenario s_;
  Engine engine_;
  NeighborhoodPartition part_;
  long t_ = 0;
  Matrix X_;
  DiscriminatorState f_;
  std::vector<DiscriminatorState> local_f_;
  std::vector<Scenario> local_s_;
  std::unique_ptr<Eliminated> elim_;
};

/// Runs T steps, recording t = 0, every `record_every` steps, and the last
/// step. Throws DivergenceError carrying the record up to the last valid step.
TrajectoryRecord simulate(const Scenario& s, long T, Engine engine, long record_every = 1);

}  // namespace kgan
