#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "exbound/curves.hpp"
#include "exbound/oracle.hpp"
#include "exbound/solver.hpp"

// Line-oriented configuration files with nested sections:
//
//   # comment
//   model {
//     kind = gbm
//     strike = 100
//     r { kind = exp_affine  a = 0.05  b = 0.5  c = 0 }
//   }
//
// One `key = value` pair per line (several pairs may share a line inside a
// brace-opened section), sections open with `name {` and close with `}`.
// The full schema, with the default of every optional field, lives in
// configs/schema.md.  Unknown keys and sections are errors carrying the
// file name and line number.
namespace exbound {

// Raised for every malformed or out-of-schema configuration; the message
// starts with "<file>:<line>:" whenever a location is known.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct PriceConfig {
    std::vector<double> spots;  // default: {0.6, 0.8, 1.0, 1.2, 1.4} * strike
    std::vector<double> times;  // default: {valuation_time}
};

struct HedgeConfig {
    double spot = 0.0;    // default: strike
    double time = 0.0;    // default: valuation_time
    int n_slices = 1024;  // maturity-ladder rungs
};

struct SweepConfig {
    std::vector<double> sigmas;  // required by the sweep subcommand
};

struct VerifyConfig {
    std::vector<double> spots;     // default: price spots
    double rel_tol = 0.002;        // price match: relative part
    double abs_tol_rel = 0.005;    // price match: absolute part, times strike
    int boundary_cells = 2;        // boundary containment in oracle cells
    double boundary_skirt = 0.05;  // years before maturity left unchecked
    FdOptions fd;                  // oracle resolution (n_space, n_time)
};

struct RunConfig {
    ModelSpec model;
    SolverOptions solver;
    PriceConfig price;
    HedgeConfig hedge;
    SweepConfig sweep;
    VerifyConfig verify;
    std::string out_dir = "out";
    std::string source_name;  // file name used in diagnostics
    std::string raw_text;     // verbatim file contents (hashed in manifests)
};

// Parse + schema-check a configuration given as text.  `name` labels the
// source in error messages.  Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::string& name);

// Reads the file and delegates to parse_config.  Throws ConfigError (also
// for unreadable paths).
RunConfig load_config(const std::string& path);

// FNV-1a 64-bit hash of the raw text, rendered as 16 hex digits; stamped
// into run manifests so artifacts can be traced back to their exact input.
std::string config_hash(const std::string& raw_text);

}  // namespace exbound
