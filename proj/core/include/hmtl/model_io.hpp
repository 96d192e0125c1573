#pragma once

#include <iosfwd>
#include <string>

#include "hmtl/types.hpp"

namespace hmtl {

// Plain-text model file. Whitespace separated, one record per line, all
// doubles written with 17 significant digits so a load reproduces the saved
// values bit for bit:
//
//   hmtl-model 1
//   dims <T> <m> <d>
//   lambdas <lambda0> <lambda1> <lambda2>
//   theta <t>            followed by d rows of m values (row-major)
//   omega <t>            followed by m rows of m values (row-major)
//   report <outer_iterations> <converged 0|1> <omega_rejections> <min_omega_eigenvalue> <elapsed_seconds>
//   initial_objective <value>
//   objective_trace <count> <values...>
//   admm_iterations <count> <values...>
//   theta_iterations <count> <values...>
//   end
//
// theta/omega blocks appear for t = 0..T-1 in order.

void write_model(std::ostream& os, const HmtlModel& model);
HmtlModel read_model(std::istream& is);

void save_model(const std::string& path, const HmtlModel& model);
HmtlModel load_model(const std::string& path);

/// "%.17g" rendering used by every file writer in the library.
std::string format_double(double v);

}  // namespace hmtl
