// A fan of null geodesics leaving the equator of a horizon threaded by a weak
// monopole field. Every direction keeps its Carroll charge; the sign of Q decides
// whether |t| grows or decays.
#include <cmath>
#include <cstdio>
#include <numbers>

#include "carroll/carroll.hpp"

int main() {
    using namespace carroll;
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}, {"b", "0.3"}});
    const double pi = std::numbers::pi;
    IntegratorConfig cfg;
    cfg.lambda_max = 6.0;

    std::vector<GeodesicState> starts;
    std::vector<double> charges;
    for (double Q : {-0.5, 0.5})
        for (int k = 0; k < 6; ++k) {
            const double a = 2.0 * pi * k / 6.0;
            NullShootSpec spec;
            spec.x0 = Vec::Zero(2);
            spec.x0(0) = pi / 2;
            spec.u = Vec(2);
            spec.u << std::cos(a), std::sin(a);  // unit at the equator of the unit sphere
            spec.Q = Q;
            starts.push_back(shoot_null(spec, s.g, s.A));
            charges.push_back(Q);
        }
    const auto runs = integrate_batch(s.flow(), starts, cfg);

    std::printf("%6s %6s %10s %10s %12s %10s %10s %s\n", "Q", "angle", "theta", "phi", "t", "dQ", "dnull", "event");
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& tr = runs[k];
        // Report the end point in angular coordinates whatever chart it finished in.
        const Point end = s.atlas->transform(tr.back().point(), 0);
        std::printf("%6.2f %6.0f %10.5f %10.5f %12.5e %10.2e %10.2e %s\n", charges[k], 60.0 * double(k % 6),
                    end.x(0), end.x(1), end.t, tr.max_charge_drift(), tr.max_null_drift(), to_string(tr.event));
    }
    return 0;
}
