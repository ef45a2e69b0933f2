// classdiag: structured diagnostics for classification studies.
//
// Every subcommand maps to one procedure of the library's run() pipeline;
// a JSON config carries the data wiring and parameters, and a handful of
// flags cover the common overrides. Results land in <out>/report.json plus
// long-format CSV plot data.

#include "classdiag/errors.hpp"
#include "classdiag/report.hpp"
#include "classdiag/threading.hpp"

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
    std::string input;
    std::string label_column;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--out", flags.output_dir, "output directory (overrides config)");
    cmd->add_option("--input", flags.input, "dataset CSV (overrides config)");
    cmd->add_option("--label", flags.label_column, "label column name (overrides config)");
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { flags.seed_given = true; });
    cmd->add_option("--threads", flags.threads,
                    "worker thread budget; never affects results, only wall time");
}

classdiag::RunConfig assemble(const CommonFlags& flags, const std::string& procedure) {
    classdiag::RunConfig config;
    if (!flags.config_path.empty()) config = classdiag::load_config(flags.config_path);
    if (!flags.input.empty()) config.input = flags.input;
    if (!flags.label_column.empty()) config.label_column = flags.label_column;
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    if (flags.seed_given) {
        config.seed = flags.seed;
        config.seed_set = true;
    }
    config.procedures = {procedure};
    return config;
}

void print_summary(const classdiag::ReportBundle& bundle) {
    const auto& sections = bundle.document.at("sections");
    for (const auto& [name, section] : sections.items()) {
        std::cout << "section " << name;
        if (section.contains("curve")) {
            std::cout << ": " << section.at("curve").at("points").size() << " points";
        } else if (section.contains("entries")) {
            std::cout << ": " << section.at("entries").size() << " entries";
        } else if (name == "confusion") {
            std::cout << ": error " << section.at("overall_error").get<double>() << ", kappa "
                      << section.at("kappa").get<double>();
        } else if (name == "verify-theory") {
            std::cout << ": lemma " << section.at("lemma").at("within_3sd").get<std::size_t>()
                      << "/" << section.at("lemma").at("specs").get<std::size_t>()
                      << " within 3sd, theorem violations "
                      << section.at("theorem").at("violations").get<std::size_t>();
        }
        std::cout << '\n';
    }
    for (const auto& w : bundle.document.at("warnings")) {
        std::cout << "warning: " << w.get<std::string>() << '\n';
    }
    for (const auto& f : bundle.files_written) std::cout << "wrote " << f.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured diagnostics for classification studies"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"separation", "distance of separation for every class pair and feature set"},
        {"learning-curve", "test error vs training sample size"},
        {"noise-curve", "test error vs training label contamination"},
        {"small-sample", "learning curve on the 28..140 small-sample grid"},
        {"importance", "random-forest permutation feature importance"},
        {"confusion", "confusion matrix with error rates and kappa"},
        {"downsample-sweep", "error vs downsampling ratio of one class"},
        {"compare-features", "paired learning curves per feature set"},
        {"corr-heatmap", "feature correlation matrix (absolute by default)"},
        {"synth", "sample a two-component Gaussian mixture to CSV"},
        {"verify-theory", "closed-form Bayes rate and block-expansion verification suite"},
        {"bayes-curve", "Bayes error as a function of the separation"},
    };

    CommonFlags flags;
    // Subcommand-specific convenience flags write straight into these and
    // are applied on top of the config after parsing.
    std::string target_class, feature_set, predictions_input;
    std::vector<double> mu;
    double rho = -2.0, theta = -1.0, d_max = -1.0, d_step = -1.0;
    std::uint64_t synth_n = 0;
    std::string synth_out;
    bool signed_correlation = false;
    std::uint64_t lemma_specs = 0, lemma_draws = 0, theorem_instances = 0;

    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, flags);
        const std::string name = s.name;
        if (name == "downsample-sweep") {
            cmd->add_option("--target-class", target_class, "class to downsample");
        }
        if (name == "learning-curve" || name == "noise-curve" || name == "small-sample" ||
            name == "importance" || name == "confusion" || name == "downsample-sweep") {
            cmd->add_option("--feature-set", feature_set, "restrict to one configured feature set");
        }
        if (name == "confusion") {
            cmd->add_option("--pred-file", predictions_input,
                            "CSV of true,predicted class names (skips training)");
        }
        if (name == "synth") {
            cmd->add_option("--mu", mu, "mixture center (+mu / -mu), comma separated")
                ->delimiter(',');
            cmd->add_option("--rho", rho, "AR(1) covariance decay (default 0 = identity)");
            cmd->add_option("--theta", theta, "class-1 probability (default 0.5)");
            cmd->add_option("--n", synth_n, "number of rows to draw");
            cmd->add_option("--csv-out", synth_out, "output file name inside --out");
        }
        if (name == "bayes-curve") {
            cmd->add_option("--d-max", d_max, "largest separation on the grid (default 25)");
            cmd->add_option("--d-step", d_step, "grid step (default 0.25)");
        }
        if (name == "corr-heatmap") {
            cmd->add_flag("--signed", signed_correlation, "emit signed instead of absolute values");
        }
        if (name == "verify-theory") {
            cmd->add_option("--lemma-specs", lemma_specs, "number of random mixture specs");
            cmd->add_option("--lemma-draws", lemma_draws, "Monte-Carlo draws per spec");
            cmd->add_option("--theorem-instances", theorem_instances,
                            "number of generated inequality instances");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage errors are config errors
    }

    try {
        const CLI::App* active = app.get_subcommands().front();
        classdiag::RunConfig config = assemble(flags, active->get_name());
        if (flags.threads > 0) classdiag::set_thread_budget(flags.threads);

        auto& pp = config.params;
        if (!target_class.empty()) pp.target_class = target_class;
        if (!feature_set.empty()) pp.feature_set = feature_set;
        if (!predictions_input.empty()) pp.predictions_input = predictions_input;
        if (!mu.empty()) pp.synth.mu = mu;
        if (rho > -1.5) pp.synth.rho = rho;
        if (theta >= 0.0) pp.synth.theta = theta;
        if (synth_n > 0) pp.synth.n = synth_n;
        if (!synth_out.empty()) pp.synth.out = synth_out;
        if (d_max >= 0.0) pp.d_max = d_max;
        if (d_step > 0.0) pp.d_step = d_step;
        if (signed_correlation) pp.signed_correlation = true;
        if (lemma_specs > 0) pp.lemma_specs = lemma_specs;
        if (lemma_draws > 0) pp.lemma_draws = lemma_draws;
        if (theorem_instances > 0) pp.theorem_instances = theorem_instances;

        const classdiag::ReportBundle bundle = classdiag::run(config);
        print_summary(bundle);
        return 0;
    } catch (const classdiag::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
