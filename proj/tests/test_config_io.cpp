#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "oamqkd/config.hpp"
#include "oamqkd/io.hpp"
#include "oamqkd/presets.hpp"
#include "oamqkd/scenario.hpp"

using namespace oamqkd;

namespace {

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("oamqkd_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("presets: all shipped presets parse and validate") {
    for (const char* name : {"2mode", "3mode", "stability"}) {
        const ScenarioConfig cfg = parse_config_text(preset_text(name));
        REQUIRE(cfg.run.qkd_modes.size() >= 1);
        REQUIRE(cfg.protocol.qubit_rate_hz == Catch::Approx(5.95e8));
        REQUIRE(cfg.receiver.sync_loss_db == Catch::Approx(9.15));
        REQUIRE(cfg.detector.efficiency == Catch::Approx(0.83));
    }
    REQUIRE_THROWS_AS(preset_text("nope"), std::invalid_argument);
}

TEST_CASE("config: schema violations carry field paths") {
    nlohmann::json j = nlohmann::json::parse(preset_text("2mode"));

    nlohmann::json bad_mode = j;
    bad_mode["run"]["qkd_modes"] = {-7, 4};
    REQUIRE_THROWS_WITH(parse_config(bad_mode), Catch::Matchers::ContainsSubstring("run.qkd_modes[1]"));

    nlohmann::json no_tx = j;
    no_tx.erase("transmitters");
    REQUIRE_THROWS_WITH(parse_config(no_tx), Catch::Matchers::ContainsSubstring("transmitters"));

    nlohmann::json bad_mu = j;
    bad_mu["transmitters"][0]["mu2"] = 0.5;  // mu2 > mu1
    REQUIRE_THROWS_WITH(parse_config(bad_mu), Catch::Matchers::ContainsSubstring("transmitters[0]"));

    nlohmann::json bad_coupling = j;
    bad_coupling["demux_coupling_db"].erase("-5");
    REQUIRE_THROWS_WITH(parse_config(bad_coupling),
                        Catch::Matchers::ContainsSubstring("demux_coupling_db"));

    nlohmann::json bad_window = j;
    bad_window["run"]["stability_window_s"] = 70.0;  // does not divide 4500
    REQUIRE_THROWS_WITH(parse_config(bad_window),
                        Catch::Matchers::ContainsSubstring("stability_window_s"));

    nlohmann::json bad_type = j;
    bad_type["fiber"]["modes"] = "oops";
    REQUIRE_THROWS_WITH(parse_config(bad_type), Catch::Matchers::ContainsSubstring("fiber.modes"));
}

TEST_CASE("config: transmitter lookup and mode context construction") {
    const ScenarioConfig cfg = parse_config_text(preset_text("2mode"));
    REQUIRE(cfg.transmitter(-7).mu1 == Catch::Approx(0.26));
    REQUIRE(cfg.transmitter(-5).mu1 == Catch::Approx(0.36));
    const ModeLinkContext ctx =
        cfg.build_mode_context(-7, cfg.run.qkd_modes, HeaterState::zeros(26));
    REQUIRE(ctx.leaks.size() == 1);
    // Loss chain: ~1 dB fiber + ~14.9 dB demux + 9.15 dB sync, well below unity.
    REQUIRE(ctx.signal_scale < db_loss_to_transmittance(20.0));
    REQUIRE(ctx.signal_scale > db_loss_to_transmittance(30.0));
    // The leak is far below the signal (crosstalk-limited).
    REQUIRE(ctx.leaks[0].leak_scale < 0.12 * ctx.signal_scale);
}

TEST_CASE("io: crosstalk CSV writing is idempotent and JSON carries NaNs as null") {
    CrosstalkMatrix xt;
    xt.modes = {-7, -5};
    xt.db = {0.0, -12.34, std::numeric_limits<double>::quiet_NaN(), 0.0};
    xt.degenerate_inputs = {-7};
    const std::string csv = crosstalk_to_csv(xt);
    const CrosstalkMatrix parsed = crosstalk_from_csv(csv);
    REQUIRE(crosstalk_to_csv(parsed) == csv);
    REQUIRE(parsed.modes == xt.modes);
    REQUIRE(parsed.db[1] == Catch::Approx(-12.34));
    REQUIRE(std::isnan(parsed.db[2]));
    const nlohmann::json j = crosstalk_to_json(xt);
    REQUIRE(j["db"][1][0].is_null());
}

TEST_CASE("io: qber table and stability CSV round-trip exactly") {
    std::vector<QberTableEntry> entries(2);
    entries[0] = {-7, 0.26, 0.13, 2.1512345678901234, 2.13, 4.23, 4.08};
    entries[1] = {-5, 0.36, 0.13, 1.35, 2.0000000001, 3.53, 4.12};
    const auto parsed = qber_table_from_csv(qber_table_to_csv(entries));
    REQUIRE(parsed.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        REQUIRE(parsed[i].mode == entries[i].mode);
        REQUIRE(parsed[i].mu1 == entries[i].mu1);
        REQUIRE(parsed[i].qz_mu1 == entries[i].qz_mu1);
        REQUIRE(parsed[i].qz_mu2 == entries[i].qz_mu2);
        REQUIRE(parsed[i].qx_mu2 == entries[i].qx_mu2);
    }

    std::vector<StabilityWindow> wins{{0.0, 0.0123456789012345, 0.04}, {75.0, 0.0125, 0.0407}};
    const auto wparsed = stability_from_csv(stability_to_csv(wins));
    REQUIRE(wparsed.size() == 2);
    REQUIRE(wparsed[1].qber_z == wins[1].qber_z);
    REQUIRE(wparsed[1].qber_x == wins[1].qber_x);
}

TEST_CASE("io: tally JSON and heater JSON round-trip") {
    TallyBlock t;
    t.duration_s = 12.5;
    t.n_z = {1234567.0, 89012.0};
    t.m_z = {123.0, 45.0};
    t.n_x = {6789.0, 321.0};
    t.m_x = {12.0, 3.0};
    const TallyBlock back = tally_from_json(tally_to_json(t));
    REQUIRE(back.duration_s == t.duration_s);
    REQUIRE(back.n_z == t.n_z);
    REQUIRE(back.m_x == t.m_x);

    HeaterState h;
    h.phase_trim = {0.1, -0.2, 0.33333333333333331};
    const HeaterState hback = heaters_from_json(heaters_to_json(h));
    REQUIRE(hback.phase_trim == h.phase_trim);
}

TEST_CASE("scenario: identical config and seed give byte-identical outputs") {
    ScenarioConfig cfg = parse_config_text(preset_text("2mode"));
    cfg.run.duration_s = 2.0;
    cfg.heater.calibration_rounds = 2;  // keep the test quick

    const std::string dir_a = temp_dir("det_a");
    const std::string dir_b = temp_dir("det_b");
    emit_crosstalk_outputs(dir_a, run_crosstalk(cfg, 99));
    emit_crosstalk_outputs(dir_b, run_crosstalk(cfg, 99));
    emit_qkd_outputs(dir_a, run_qkd(cfg, cfg.run.qkd_modes, 99));
    emit_qkd_outputs(dir_b, run_qkd(cfg, cfg.run.qkd_modes, 99));
    for (const char* f : {"crosstalk.csv", "crosstalk_tof.csv", "heaters.json", "qber_table.csv",
                          "skr.csv", "report.json"}) {
        REQUIRE(read_text_file(dir_a + "/" + std::string(f)) ==
                read_text_file(dir_b + "/" + std::string(f)));
    }

    // A different seed must change the sampled outputs.
    const std::string dir_c = temp_dir("det_c");
    emit_qkd_outputs(dir_c, run_qkd(cfg, cfg.run.qkd_modes, 100));
    REQUIRE(read_text_file(dir_a + "/report.json") != read_text_file(dir_c + "/report.json"));
}

TEST_CASE("scenario: stability run emits exactly duration/window windows") {
    ScenarioConfig cfg = parse_config_text(preset_text("stability"));
    cfg.run.stability_duration_s = 600.0;
    cfg.run.stability_window_s = 75.0;
    const StabilityRunResult r = run_stability(cfg, 5, true);
    REQUIRE(r.windows.size() == 8);
    REQUIRE(r.windows[3].start_s == Catch::Approx(225.0));
    const std::string dir = temp_dir("stab");
    emit_stability_outputs(dir, r);
    const auto wins = stability_from_csv(read_text_file(dir + "/stability.csv"));
    REQUIRE(wins.size() == 8);
    REQUIRE(wins[3].qber_z == r.windows[3].qber_z);
}

TEST_CASE("scenario: disabled drift gives a flat stability series") {
    ScenarioConfig cfg = parse_config_text(preset_text("stability"));
    cfg.run.stability_duration_s = 300.0;
    cfg.run.stability_window_s = 75.0;
    cfg.run.heater_drift.sigma_rad = 0.0;
    cfg.receiver.residual_phase_rms_rad = 0.0;
    const StabilityRunResult r = run_stability(cfg, 6, true);
    REQUIRE(r.windows.size() == 4);
    // All windows statistically identical: spread limited to sampling noise.
    double mn = 1.0, mx = 0.0;
    for (const auto& w : r.windows) {
        mn = std::min(mn, w.qber_z);
        mx = std::max(mx, w.qber_z);
    }
    REQUIRE(mx - mn < 5e-4);
}
