#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mvf/drivers.hpp"
#include "mvf/grid_measure.hpp"
#include "mvf/integrands.hpp"

namespace mvf {

// phi.S per scenario and time index, dense (w, l, atom)
class ChargePath {
 public:
  // P*(N+1)*(J+1) above this many doubles is refused; use the streaming helpers
  static constexpr std::size_t kMaxDoubles = std::size_t{1} << 26;

  ChargePath() = default;
  ChargePath(const CompactGrid& g, const TimeGrid& tg, const ScenarioSet& sc, bool stopped);

  const CompactGrid& grid() const { return grid_; }
  const TimeGrid& time_grid() const { return tg_; }
  const ScenarioSet& scenarios() const { return sc_; }
  bool stopped() const { return stopped_; }
  std::size_t P() const { return sc_.size(); }
  std::size_t N() const { return tg_.N; }
  std::span<const double> at(std::size_t w, std::size_t l) const;
  std::span<double> at_mut(std::size_t w, std::size_t l);
  SignedMeasure measure(std::size_t w, std::size_t l) const;

 private:
  CompactGrid grid_;
  TimeGrid tg_;
  ScenarioSet sc_;
  bool stopped_ = false;
  std::vector<double> w_;
};

ChargePath mv_integral(const MeasureProcess& phi, const DriverPath& S, const StoppingRule* upto = nullptr);
PathEnsemble evaluate_charge(const ChargePath& charge, std::span<const double> g);

// streaming forms that never hold the whole charge: pairings of phi.S with each g,
// and the terminal charge at the horizon (P x (J+1))
std::vector<PathEnsemble> mv_integral_pairings(const MeasureProcess& phi, const DriverPath& S,
                                               const std::vector<GridFunction>& gs,
                                               const StoppingRule* upto = nullptr);
PathEnsemble mv_integral_terminal(const MeasureProcess& phi, const DriverPath& S);

double r_seminorm(const ChargePath& charge, const TestFamily& fam);
double r_seminorm(const std::vector<PathEnsemble>& pairings, const TestFamily& fam, const ScenarioSet& sc);

struct FubiniRow {
  std::string id;
  double max_disc = 0;
  std::size_t scenario = 0, time = 0;
};

struct FubiniReport {
  double max_abs = 0;
  double mean_abs = 0;
  std::vector<FubiniRow> rows;
};

// corrupt != 0 perturbs the integrand side of every comparison (negative-control fixture)
FubiniReport fubini_check_regular(const MeasureProcess& phi, const DriverPath& S, const TestFamily& fam,
                                  const StoppingRule* upto = nullptr, double corrupt = 0.0);

struct CellSet {
  std::string label;
  GridFunction indicator;
};
CellSet closed_interval_set(const CompactGrid& g, double a, double b);
CellSet singleton_set(const CompactGrid& g, std::size_t j);
CellSet empty_set(const CompactGrid& g);
CellSet full_set(const CompactGrid& g);

FubiniReport fubini_check_general(const MeasureProcess& phi, const DriverPath& S, const std::vector<CellSet>& sets,
                                  const StoppingRule* upto = nullptr, double corrupt = 0.0);

struct Ineq312 {
  double r_value = 0, q_value = 0, se = 0;
  bool holds = false;
};
Ineq312 inequality_3_12_check(const MeasureProcess& phi, const DriverPath& S, const PathEnsemble& V,
                              const StoppingRule& tau, const TestFamily& fam);

struct TransferRow {
  std::size_t n = 0;
  double q = 0, r = 0;
  bool r_le_q = true;
};
struct TransferReport {
  std::vector<TransferRow> rows;
  double uniform_bound = 0;  // sup_n max_k ||N^n(u_k)||_{R^2} / ||u_k||
};
TransferReport convergence_transfer_check(const MeasureProcess& phi, const std::vector<MeasureProcess>& seq,
                                          const DriverPath& S, const StoppingRule& tau, const PathEnsemble& V,
                                          const TestFamily& fam);

std::string to_csv(const FubiniReport& rep);
std::string to_csv(const TransferReport& rep);

}  // namespace mvf
