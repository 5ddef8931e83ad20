// Photon with Carroll charge Q = 1 on the equator of the Schwarzschild horizon.
// The base motion is phi = lambda while the fiber decays as t = exp(-lambda).
#include <cmath>
#include <cstdio>
#include <numbers>

#include "carroll/carroll.hpp"

int main() {
    using namespace carroll;
    const Scenario s = make_schwarzschild({{"GM", "0.5"}});
    NullShootSpec spec;
    spec.x0 = Vec::Zero(2);
    spec.x0(0) = std::numbers::pi / 2;
    spec.u = Vec::Unit(2, 1);
    spec.Q = 1.0;
    IntegratorConfig cfg;
    cfg.lambda_max = 5.0;
    const Trajectory tr = s.flow().integrate(shoot_null(spec, s.g, s.A), cfg);

    std::printf("%8s %12s %12s %14s %14s\n", "lambda", "theta", "phi", "t", "exp(-lambda)");
    double next = 0.0;
    for (const auto& x : tr.samples) {
        if (x.lambda + 1e-12 < next) continue;
        std::printf("%8.3f %12.9f %12.9f %14.6e %14.6e\n", x.lambda, x.x(0), x.x(1), x.t, std::exp(-x.lambda));
        next += 0.5;
    }
    std::printf("steps %zu, charge drift %.2e, null drift %.2e\n", tr.accepted, tr.max_charge_drift(),
                tr.max_null_drift());
    return 0;
}
