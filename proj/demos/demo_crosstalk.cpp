// Minimal usage example: calibrate the heaters of the 2-mode preset and print
// the resulting crosstalk matrix.

#include <cstdio>

#include "oamqkd/config.hpp"
#include "oamqkd/presets.hpp"
#include "oamqkd/scenario.hpp"

int main() {
    using namespace oamqkd;
    const ScenarioConfig cfg = parse_config_text(preset_text("2mode"));
    const CrosstalkRunResult result = run_crosstalk(cfg, 42);

    std::printf("heater calibration: %.1f dB -> %.1f dB worst-pair crosstalk\n",
                result.initial_worst_db, result.calibrated_worst_db);
    std::printf("power-method matrix (dB, columns = input mode):\n");
    const auto& xt = result.power;
    const size_t n = xt.modes.size();
    std::printf("%8s", "out\\in");
    for (int m : xt.modes) std::printf("%9d", m);
    std::printf("\n");
    for (size_t r = 0; r < n; ++r) {
        std::printf("%8d", xt.modes[r]);
        for (size_t c = 0; c < n; ++c) std::printf("%9.2f", xt.db[r * n + c]);
        std::printf("\n");
    }
    return 0;
}
