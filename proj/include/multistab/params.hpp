#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace multistab {

/// Physical constants of the atom-assisted optomechanical cavity.
///
/// All rates and frequencies are dimensionless, measured in units of the
/// excited-state decay rate gamma1 (hbar = 1). The collective coupling is kept
/// as the single product g*sqrt(N) because only g^2 N enters the mean-field
/// equations.
struct SystemParams {
  double gamma1 = 1.0;        // unit rate
  double gamma0 = 1e-6;       // cavity decay
  double gamma2 = 1e-4;       // metastable-level decay
  std::optional<double> gammaM;  // mirror damping; defaults to 0.1 * M * omega_M
  double Omega = 2.0;         // control Rabi frequency
  double gN = 1e2;            // collective coupling g*sqrt(N)
  double alpha_in = 10.0;     // input drive amplitude
  double omega_a = 1e6;       // |a>-|b> transition frequency
  double Delta_c = 0.0;       // control detuning
  double kappa = 1e2;         // elastic constant M omega_M^2 l^2 (energy)
  double omega_M = 1.0;       // mirror frequency
  double l = 1.0;             // equilibrium cavity length
  double F_scale = 1.0;       // susceptibility prefactor mu^2 N / (eps0 V)

  /// Parameter set used for the published steady-state and threshold figures.
  static SystemParams paper_defaults() { return {}; }

  /// Reduced-stiffness set for time-domain tests. Rates span three decades
  /// instead of twelve, so the mean-field flow can be integrated directly.
  static SystemParams stiffness_reduced();
};

/// Raised by validate() and the config reader; carries the offending field.
class ParamError : public std::invalid_argument {
 public:
  ParamError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Throws ParamError naming the first violated invariant.
void validate(const SystemParams& params);

/// Looser check for time integration: decay rates, drive and gammaM may be
/// zero (closed-form and conservation checks need them switched off).
void validate_flow(const SystemParams& params);

/// Bare cavity frequency for a given atom-cavity detuning Delta0 = omega_a - omega0.
inline double omega0(const SystemParams& params, double Delta0) {
  return params.omega_a - Delta0;
}

/// M = kappa / (omega_M^2 l^2).
inline double mirror_mass(const SystemParams& params) {
  return params.kappa / (params.omega_M * params.omega_M * params.l * params.l);
}

/// gammaM if set, otherwise 0.1 * M * omega_M (mechanical Q of about 10).
double mirror_damping(const SystemParams& params);

// Flat `key = value` config format; `#` starts a comment. Unknown keys,
// duplicate keys and unparsable numbers raise ParamError.
SystemParams read_config(std::istream& in, SystemParams base = {});
SystemParams read_config_file(const std::string& path, SystemParams base = {});
void set_field(SystemParams& params, const std::string& key, double value);

/// Writes every field (gammaM resolved to its effective value) as key = value.
void write_config(std::ostream& out, const SystemParams& params,
                  const std::string& line_prefix = "");

}  // namespace multistab
