#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "netoas/assessment.hpp"
#include "netoas/calibration.hpp"
#include "netoas/frame_io.hpp"
#include "netoas/scenegen.hpp"
#include "netoas/server.hpp"
#include "netoas/session.hpp"

using namespace netoas;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

netoas::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ContractViolation("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

int cmd_calibrate(const std::filesystem::path& frame, std::filesystem::path seeds, const std::filesystem::path& out) {
    if (seeds.empty()) seeds = frame.parent_path() / "seeds.json";
    const auto profile = calibrate(read_ppm(frame), seeds_from_json(read_json(seeds)));
    save_profile(profile, out);
    std::cout << "calibrated: ring area " << profile.ring_area_px << " px, diameter " << profile.ring_diameter_px
              << " px\n";
    return 0;
}

int cmd_run(SessionConfig cfg, const std::filesystem::path& input, const std::filesystem::path& report) {
    cfg.validate();
    if (!std::filesystem::exists(cfg.calibration_path))
        throw NotCalibrated("no calibration file at '" + cfg.calibration_path.string() + "'");
    auto source = open_frame_source(input, cfg.fps);
    const auto result = run_session(cfg, *source, [](const FeedbackMessage& m) {
        std::cout << "[" << m.frame_seq << "] " << m.text << "\n";
    });
    if (!report.empty()) {
        std::ofstream out(report, std::ios::binary);
        out << report_bytes(result.synopsis);
        if (!out) throw Error("cannot write " + report.string());
    }
    std::cout << result.synopsis.text;
    return 0;
}

int cmd_simulate(const std::string& persona, int placements, std::uint32_t seed, int fps, const std::string& level,
                 const std::filesystem::path& out) {
    const ScriptedSession s(Persona::from_name(persona), placements, fps, seed, Level::parse(level));
    write_simulation(s, out);
    std::cout << "wrote " << s.size() << " frames, " << s.truth().placements.size() << " placements to " << out.string()
              << "\n";
    return 0;
}

int cmd_train(const std::filesystem::path& corpus, const std::filesystem::path& out, double C, int folds) {
    const auto records = load_corpus(corpus);
    std::vector<FeatureVector> X;
    std::vector<SkillLabel> y;
    for (const auto& r : records) {
        X.push_back(r.features);
        y.push_back(r.label);
    }
    const auto model = train_svm(X, y, C);
    save_model(model, out);
    std::cout << "trained on " << X.size() << " sessions, training accuracy " << model.training_accuracy << "\n";
    if (folds > 1 && static_cast<int>(X.size()) >= folds)
        std::cout << folds << "-fold accuracy " << cross_validate(X, y, folds, C) << "\n";
    return 0;
}

int cmd_serve(ServerOptions opts, const std::filesystem::path& calib, const std::optional<std::filesystem::path>& model) {
    if (!std::filesystem::exists(calib)) throw NotCalibrated("no calibration file at '" + calib.string() + "'");
    opts.calib = load_profile(calib);
    if (model) opts.model = load_model(*model);
    Server server(std::move(opts));
    const auto port = server.start();
    std::cout << "listening on port " << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.wait();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pegboard skills assessment engine"};
    app.require_subcommand(1);

    std::filesystem::path frame, seeds, out, calib_path, input, report, corpus, model_path, users = "users.jsonl";
    std::string persona = "novice", level = "0", user;
    int placements = 6, fps = 50, folds = 6;
    unsigned seed = 1;
    double duration = 180, C = 1.0;
    unsigned short port = 8765;
    std::string address = "127.0.0.1";

    auto* cal = app.add_subcommand("calibrate", "Build a calibration profile from a reference frame");
    cal->add_option("--frame", frame, "Reference frame (PPM)")->required();
    cal->add_option("--seeds", seeds, "Peg clicks and seed boxes (JSON); defaults to seeds.json beside the frame");
    cal->add_option("--out", out, "Profile to write")->required();

    auto* run = app.add_subcommand("run", "Run a timed activity over recorded frames");
    run->add_option("--calib", calib_path, "Calibration profile")->required();
    run->add_option("--input", input, "Directory of PPM frames or a .y4m file")->required();
    run->add_option("--user", user, "User id the synopsis is stored under");
    run->add_option("--users", users, "User store (JSON lines)");
    run->add_option("--duration", duration, "Activity length in seconds");
    run->add_option("--report", report, "Synopsis report to write");
    run->add_option("--model", model_path, "Trained classifier");
    run->add_option("--fps", fps, "Frame rate (25 or 50)");
    run->add_option("--seed", seed, "Target sequence seed");

    auto* sim = app.add_subcommand("simulate", "Render a scripted session with ground truth");
    sim->add_option("--persona", persona, "novice or improved");
    sim->add_option("--placements", placements, "Number of placements");
    sim->add_option("--seed", seed, "Script seed");
    sim->add_option("--fps", fps, "Frame rate (25 or 50)");
    sim->add_option("--level", level, "Scope angle and tilt, e.g. 30-left");
    sim->add_option("--out", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train the skill classifier from a corpus");
    train->add_option("--corpus", corpus, "Corpus (JSON lines)")->required();
    train->add_option("--out", out, "Model to write")->required();
    train->add_option("--C", C, "Hinge penalty");
    train->add_option("--folds", folds, "Cross-validation folds reported after training");

    auto* serve = app.add_subcommand("serve", "Serve live sessions over WebSocket");
    serve->add_option("--port", port, "TCP port");
    serve->add_option("--address", address, "Bind address");
    serve->add_option("--calib", calib_path, "Calibration profile")->required();
    serve->add_option("--model", model_path, "Trained classifier");
    serve->add_option("--users", users, "User store (JSON lines)");
    serve->add_option("--duration", duration, "Activity length in seconds");
    serve->add_option("--fps", fps, "Frame rate (25 or 50)");
    serve->add_option("--seed", seed, "Target sequence seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*cal) return cmd_calibrate(frame, seeds, out);
        if (*run) {
            SessionConfig cfg;
            cfg.calibration_path = calib_path;
            cfg.duration_s = duration;
            cfg.fps = fps;
            cfg.seed = seed;
            cfg.user = user;
            cfg.user_store_path = users;
            if (!model_path.empty()) cfg.model_path = model_path;
            return cmd_run(cfg, input, report);
        }
        if (*sim) return cmd_simulate(persona, placements, seed, fps, level, out);
        if (*train) return cmd_train(corpus, out, C, folds);
        if (*serve) {
            ServerOptions opts;
            opts.address = address;
            opts.port = port;
            opts.fps = fps;
            opts.duration_s = duration;
            opts.seed = seed;
            opts.user_store = users;
            return cmd_serve(opts, calib_path,
                             model_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(model_path));
        }
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NotCalibrated& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const VersionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CalibrationConflict& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BadRingSeed& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
