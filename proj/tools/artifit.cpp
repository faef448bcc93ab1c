#include <cstdint>
#include <cstdio>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "cubefit/commands.hpp"

namespace {

struct Opts {
    std::string config, method, out, dataset, results;
    std::uint64_t seed = 0;
    int jobs = 0, scenes = 0, frames = 0;
    bool sweep = false, debug = false;
    CLI::Option* o_config = nullptr;
    CLI::Option* o_method = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_dataset = nullptr;
    CLI::Option* o_results = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_jobs = nullptr;
    CLI::Option* o_scenes = nullptr;
    CLI::Option* o_frames = nullptr;
    CLI::Option* o_sweep = nullptr;
    CLI::Option* o_debug = nullptr;
};

void add_common(CLI::App* sub, Opts& o) {
    o.o_config = sub->add_option("--config", o.config, "config file (JSON)");
    o.o_seed = sub->add_option("--seed", o.seed, "master random seed");
    o.o_jobs = sub->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    o.o_dataset = sub->add_option("--dataset", o.dataset, "dataset directory");
    o.o_out = sub->add_option("--out", o.out, "output directory");
}

// Flags beat the config file, which beats built-in defaults.
cubefit::RunConfig resolve(const Opts& o, const char* out_meaning) {
    cubefit::RunConfig cfg;
    if (o.o_config && o.o_config->count()) cfg = cubefit::load_config(o.config);
    if (o.o_seed && o.o_seed->count()) cfg.seed = o.seed;
    if (o.o_jobs && o.o_jobs->count()) cfg.jobs = o.jobs;
    if (o.o_method && o.o_method->count()) cfg.method = cubefit::method_from_name(o.method);
    if (o.o_dataset && o.o_dataset->count()) cfg.dataset_dir = o.dataset;
    if (o.o_results && o.o_results->count()) cfg.results_dir = o.results;
    if (o.o_scenes && o.o_scenes->count()) cfg.synth.scenes = o.scenes;
    if (o.o_frames && o.o_frames->count()) cfg.synth.frames = o.frames;
    if (o.o_sweep && o.o_sweep->count()) cfg.sweep = true;
    if (o.o_debug && o.o_debug->count()) cfg.debug_masks = true;
    if (o.o_out && o.o_out->count()) {
        std::string m = out_meaning;
        if (m == "dataset")
            cfg.dataset_dir = o.out;
        else if (m == "results")
            cfg.results_dir = o.out;
        else
            cfg.out_dir = o.out;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fit and evaluate hinged two-cuboid models on mask videos"};
    app.require_subcommand(1);

    std::map<std::string, Opts> opts;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic ground-truth dataset");
    {
        Opts& o = opts["synth"];
        add_common(synth, o);
        o.o_scenes = synth->add_option("--scenes", o.scenes, "number of videos");
        o.o_frames = synth->add_option("--frames", o.frames, "frames per video");
    }

    CLI::App* fit = app.add_subcommand("fit", "fit models to every video in a dataset");
    {
        Opts& o = opts["fit"];
        add_common(fit, o);
        o.o_method = fit->add_option("--method", o.method, "cubeopt|cuberand");
        o.o_debug = fit->add_flag("--debug-masks", o.debug, "dump predicted masks as PNGs");
    }

    CLI::App* eval = app.add_subcommand("eval", "score fit results against ground truth");
    {
        Opts& o = opts["eval"];
        add_common(eval, o);
        o.o_method = eval->add_option("--method", o.method, "method label for report rows");
        o.o_results = eval->add_option("--results", o.results, "fit results directory");
        o.o_sweep = eval->add_flag("--sweep", o.sweep, "emit accuracy-vs-threshold series");
    }

    CLI::App* bench = app.add_subcommand("bench", "synth + fit both methods + comparative report");
    {
        Opts& o = opts["bench"];
        add_common(bench, o);
        o.o_scenes = bench->add_option("--scenes", o.scenes, "number of videos");
        o.o_frames = bench->add_option("--frames", o.frames, "frames per video");
        o.o_sweep = bench->add_flag("--sweep", o.sweep, "emit accuracy-vs-threshold series");
        o.o_debug = bench->add_flag("--debug-masks", o.debug, "dump predicted masks as PNGs");
    }

    CLI::App* config = app.add_subcommand("config", "configuration helpers");
    config->require_subcommand(1);
    CLI::App* config_init = config->add_subcommand("init", "print a config with all defaults");
    std::string config_out;
    CLI::Option* o_config_out = config_init->add_option("--out", config_out, "write to file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) return cubefit::cmd_synth(resolve(opts["synth"], "dataset"));
        if (fit->parsed()) return cubefit::cmd_fit(resolve(opts["fit"], "results"));
        if (eval->parsed()) return cubefit::cmd_eval(resolve(opts["eval"], "report"));
        if (bench->parsed()) return cubefit::cmd_bench(resolve(opts["bench"], "report"));
        if (config_init->parsed()) {
            std::string text = cubefit::config_to_json(cubefit::RunConfig{}).dump(2) + "\n";
            if (o_config_out->count())
                cubefit::detail::write_file_atomic(config_out, text);
            else
                std::fputs(text.c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
