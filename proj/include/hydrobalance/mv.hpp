#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "hydrobalance/initial_law.hpp"
#include "hydrobalance/measure.hpp"
#include "hydrobalance/params.hpp"
#include "hydrobalance/pde.hpp"
#include "hydrobalance/rng.hpp"

namespace hydrobalance {

/// dX = (b1 + b0 v(X, t)^{ell-1}) dt + sigma dW + dL on [0, inf).
struct MvCoeffs {
  double b0 = 0.0;
  double b1 = 0.0;
  double sigma = 1.0;
  int ell = 2;

  static MvCoeffs from(const DerivedConstants& d) { return {d.b0, d.b1, std::sqrt(d.sigma2), d.ell}; }
};

struct ParticleEnsemble {
  std::vector<double> positions;
  std::vector<double> local_time;
  std::vector<Rng> streams;  ///< one per particle
  double t = 0.0;
  MvCoeffs coeffs;

  std::size_t size() const { return positions.size(); }
  double mean_local_time() const;
};

/// Particle k draws its initial position and all its noise from Rng(seed, k).
ParticleEnsemble make_ensemble(std::size_t count, const InitialLaw& initial, const MvCoeffs& coeffs,
                               std::uint64_t seed);

/// Where the tail v(x, t) in the drift comes from.
struct DriftSource {
  struct PdeFed {
    std::shared_ptr<const TailHistory> history;
  };
  /// Open empirical tail of the ensemble itself (particle included), frozen at step start.
  struct SelfConsistent {};
  struct Stationary {
    StationaryProfile profile;
  };

  std::variant<PdeFed, SelfConsistent, Stationary> source = SelfConsistent{};

  static DriftSource pde_fed(std::shared_ptr<const TailHistory> h) { return {PdeFed{std::move(h)}}; }
  static DriftSource self_consistent() { return {SelfConsistent{}}; }
  static DriftSource stationary(StationaryProfile p) { return {Stationary{p}}; }
};

/// One projected Euler-Maruyama step:  p = X + drift dt + sigma sqrt(dt) xi,
/// X <- max(p, 0),  L += max(-p, 0).
void mv_step(ParticleEnsemble& ens, const DriftSource& drift, double dt, unsigned jobs = 1);

struct MvSnapshot {
  double t;
  EmpiricalMeasure measure;
  MeasureStats stats;
  double mean_local_time;
};

struct MvOutput {
  std::vector<MvSnapshot> snapshots;
};

/// Steps of size dt (the last step before each snapshot shortened to land on
/// it). Throws when a PDE-fed history does not cover [0, t_end].
MvOutput mv_run(std::size_t count, const InitialLaw& initial, const MvCoeffs& coeffs, const DriftSource& drift,
                double dt, std::span<const double> snapshot_times, std::uint64_t seed, unsigned jobs = 1);

struct ChaosEstimate {
  double covariance;
  double stderr_;
};

/// Cov(1{X_i > x*}, 1{X_j > x*}) for i != j, estimated from independent
/// replications of the ensemble: pairs within a replication give E[I_i I_j],
/// pairs of distinct replications give E[I_i] E[I_j]. Unbiased under
/// exchangeability; standard error by jackknife over replications.
/// Needs >= 2 replications of >= 2 particles.
ChaosEstimate chaos_diagnostic(std::span<const EmpiricalMeasure> replications, double threshold);

}  // namespace hydrobalance
