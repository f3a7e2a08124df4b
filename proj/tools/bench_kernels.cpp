// Micro-benchmark comparing the OpenMP transcription kernels against their
// serial reference twins and checking that both produce identical bits.
//
//   bench_kernels [intervals] [repeats]

#include "singarc/benchmarks.hpp"
#include "singarc/transcription.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using singarc::Vec;
using Clock = std::chrono::steady_clock;

template <typename F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-22s %10.3f ms %10.3f ms   x%-6.2f %s\n", name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int Z = argc > 1 ? std::atoi(argv[1]) : 2000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 20;
  if (Z < 2 || repeats < 1) {
    std::fprintf(stderr, "usage: bench_kernels [intervals >= 2] [repeats >= 1]\n");
    return 1;
  }

  const auto ocp = singarc::second_order_singular();
  const auto mesh = singarc::Mesh::uniform(ocp.t0, ocp.tf, Z);
  const singarc::HsTranscription tr(ocp, mesh);
  const auto quad = singarc::ResidualQuadrature::build(mesh, ocp.n_states);

  // A cold start is too structured (lots of exact zeros); jitter it so the
  // kernels see generic values.
  Vec w = tr.cold_start();
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (int i = 0; i < w.size(); ++i) w[i] += jitter(rng);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("intervals=%d  decision variables=%d  constraint rows=%d  threads=%d\n", Z,
              static_cast<int>(w.size()), static_cast<int>(tr.constraints(w).size()), threads);

  double s_val = 0, p_val = 0;
  const double obj_s = best_ms(repeats, [&] { s_val = tr.objective_serial(w); });
  const double obj_p = best_ms(repeats, [&] { p_val = tr.objective(w); });
  report("objective", obj_s, obj_p, s_val == p_val);

  Vec gs, gp;
  const double grad_s = best_ms(repeats, [&] { gs = tr.objective_gradient_serial(w); });
  const double grad_p = best_ms(repeats, [&] { gp = tr.objective_gradient(w); });
  report("objective_gradient", grad_s, grad_p, gs.size() == gp.size() && (gs.array() == gp.array()).all());

  Vec cs, cp;
  const double con_s = best_ms(repeats, [&] { cs = tr.constraints_serial(w); });
  const double con_p = best_ms(repeats, [&] { cp = tr.constraints(w); });
  report("constraints", con_s, con_p, cs.size() == cp.size() && (cs.array() == cp.array()).all());

  singarc::SpMat js, jp;
  const double jac_s = best_ms(repeats, [&] { js = tr.constraint_jacobian_serial(w); });
  const double jac_p = best_ms(repeats, [&] { jp = tr.constraint_jacobian(w); });
  bool jac_same = js.nonZeros() == jp.nonZeros();
  if (jac_same)
    for (int k = 0; k < js.nonZeros(); ++k)
      if (js.valuePtr()[k] != jp.valuePtr()[k] || js.innerIndexPtr()[k] != jp.innerIndexPtr()[k]) {
        jac_same = false;
        break;
      }
  report("constraint_jacobian", jac_s, jac_p, jac_same);

  const double res_s = best_ms(repeats, [&] { s_val = tr.residual_serial(w, quad); });
  const double res_p = best_ms(repeats, [&] { p_val = tr.residual(w, quad); });
  report("residual", res_s, res_p, s_val == p_val);

  Vec rs, rp;
  const double rg_s = best_ms(repeats, [&] { rs = tr.residual_gradient_serial(w, quad); });
  const double rg_p = best_ms(repeats, [&] { rp = tr.residual_gradient(w, quad); });
  report("residual_gradient", rg_s, rg_p, rs.size() == rp.size() && (rs.array() == rp.array()).all());

  return 0;
}
