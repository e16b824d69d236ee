#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unim/common.hpp"
#include "unim/dataset.hpp"
#include "unim/image.hpp"
#include "unim/rationality.hpp"
#include "unim/report.hpp"
#include "unim/runner.hpp"
#include "unim/structure.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitPartial = 4;

std::set<unim::seq::Modality> parse_support(const std::string& list) {
    std::set<unim::seq::Modality> supported;
    if (list.empty()) {
        for (auto m : unim::seq::kTagModalities) supported.insert(m);
        return supported;
    }
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        auto m = unim::seq::modality_from_keyword(item);
        if (!m) m = unim::seq::modality_from_name(item);
        if (!m || *m == unim::seq::Modality::Text) {
            throw unim::ConfigError("--support lists unknown modality '" + item + "'");
        }
        supported.insert(*m);
    }
    return supported;
}

std::map<std::string, std::string> parse_filters(const std::vector<std::string>& pairs) {
    std::map<std::string, std::string> filters;
    for (const auto& pair : pairs) {
        size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= pair.size()) {
            throw unim::ConfigError("--filter expects key=value, got '" + pair + "'");
        }
        filters[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
    return filters;
}

int run_command(const unim::runner::RunConfig& config) {
    auto outcome = unim::runner::run_eval(config);
    unim::runner::write_outputs(config, outcome);

    std::cout << unim::report::render_table(outcome.report);
    std::cout << "\ninstances " << outcome.instances_total << ", joined " << outcome.joined
              << ", supported " << outcome.supported << ", judge-incomplete "
              << outcome.judge_incomplete << "\n";
    for (const auto& id : outcome.ingest.orphan_responses) {
        std::cerr << "orphan response: " << id << "\n";
    }
    for (const auto& id : outcome.ingest.uncovered_instances) {
        std::cerr << "uncovered instance: " << id << "\n";
    }
    for (const auto& warning : outcome.ingest.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    std::cout << "reports written to " << config.out_dir << "\n";

    if (outcome.joined == 0) {
        std::cerr << "error: no instance-response pairs to evaluate; the report has "
                     "zero rows\n";
        return kExitIngest;
    }
    if (outcome.judge_incomplete > 0) {
        std::cerr << "warning: " << outcome.judge_incomplete
                  << " judge-incomplete instance(s); judged metrics are partial\n";
        return kExitPartial;
    }
    return kExitOk;
}

int rationality_command(const std::string& dataset_root, int span, int sample,
                        uint64_t seed, const std::string& out_dir) {
    auto instances = unim::dataset::load_instances(dataset_root);
    std::vector<unim::rationality::EligibleInstance> pool;
    for (const auto& inst : instances) {
        if (unim::rationality::is_eligible(unim::seq::modality_counts(inst.ground_truth))) {
            pool.push_back({inst.id, inst.ground_truth});
        }
    }
    auto selected = unim::rationality::select_eligible(
        pool, static_cast<size_t>(sample), seed);
    if (selected.empty()) {
        std::cerr << "error: no eligible instances (need >=2 modality types and one "
                     "type with >2 tags)\n";
        return kExitIngest;
    }
    auto curves = unim::rationality::run_rationality(selected, span, seed);

    std::ostringstream csv;
    csv << "kind,k,mean_strict,mean_lenient,n\n";
    std::cout << "kind   k   StS      LeS      n\n";
    for (const auto& point : curves.points) {
        const char* kind =
            point.kind == unim::rationality::PerturbKind::Type ? "type" : "count";
        csv << kind << "," << point.k << "," << point.mean_strict << ","
            << point.mean_lenient << "," << point.n << "\n";
        char line[96];
        std::snprintf(line, sizeof(line), "%-5s %+2d  %7.4f  %7.4f  %d", kind, point.k,
                      point.mean_strict, point.mean_lenient, point.n);
        std::cout << line << "\n";
    }
    std::cout << "eligible " << curves.eligible << ", sampled " << curves.sampled << "\n";

    fs::create_directories(out_dir);
    unim::write_file_atomic((fs::path(out_dir) / "rationality.csv").string(), csv.str());
    std::cout << "curve written to " << out_dir << "/rationality.csv\n";
    return kExitOk;
}

int fit_niqe_command(const std::string& image_dir, const std::string& out_path,
                     int patch, double d0, double min_sharpness) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        throw unim::ConfigError("no png/jpg images found in " + image_dir);
    }
    std::vector<unim::image::Image> images;
    for (const auto& path : paths) {
        images.push_back(unim::image::load_image_gray(path));
        std::cout << "loaded " << path << "\n";
    }
    auto model = unim::image::fit_niqe_model(images, patch, d0, min_sharpness);
    if (fs::path(out_path).has_parent_path()) {
        fs::create_directories(fs::path(out_path).parent_path());
    }
    unim::image::save_niqe_model(out_path, model);
    std::cout << "fitted on " << images.size() << " images, model written to " << out_path
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UniM evaluation suite for any-to-any interleaved responses"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Score a response file against a dataset");
    std::string dataset, responses, support_list, judge_mode = "mock";
    std::string endpoint, model_name, credential_env;
    std::string out_dir = "out", rubric_dir = "data/rubrics";
    std::string niqe_path = "data/niqe/niqe_model_v1.txt", model_id = "unknown";
    double eta_sqcs = unim::compose::kDefaultEtaSqcs;
    double eta_ics = unim::compose::kDefaultEtaIcs;
    std::vector<std::string> group_by, filter_pairs;
    int jobs = 1;
    uint64_t seed = 0;
    bool threed_via_render = false, no_caption_cache = false;
    run->add_option("--dataset", dataset, "Dataset root directory (holds instances.jsonl)")
        ->required();
    run->add_option("--responses", responses, "Line-delimited model response file")
        ->required();
    run->add_option("--support", support_list,
                    "Comma list of supported input modalities (default: all)");
    run->add_option("--model-id", model_id, "Evaluated model identifier for the manifest");
    run->add_option("--judge", judge_mode, "Judge backend: mock or live")
        ->check(CLI::IsMember({"mock", "live"}));
    run->add_option("--endpoint", endpoint, "Live judge endpoint URL");
    run->add_option("--model", model_name, "Live judge model name");
    run->add_option("--credential-env", credential_env,
                    "Name of the environment variable holding the API key");
    run->add_option("--eta-sqcs", eta_sqcs, "SQCS mixing weight");
    run->add_option("--eta-ics", eta_ics, "ICS mixing weight");
    run->add_option("--group-by", group_by,
                    "Aggregation dimension (repeatable): field, domain, difficulty, "
                    "capability");
    run->add_option("--filter", filter_pairs, "key=value restriction (repeatable)");
    run->add_option("--jobs", jobs, "Worker threads");
    run->add_option("--out-dir", out_dir, "Output directory");
    run->add_option("--seed", seed, "Mock judge seed");
    run->add_option("--rubrics", rubric_dir, "Rubric directory");
    run->add_option("--niqe-model", niqe_path, "NIQE reference model file");
    run->add_flag("--threed-via-render", threed_via_render,
                  "Caption 3d assets through the general captioner");
    run->add_flag("--no-caption-cache", no_caption_cache, "Disable the caption cache");

    // rationality
    auto* rat = app.add_subcommand(
        "rationality", "Perturbation study of the structure metrics on a dataset");
    std::string rat_dataset, rat_out = "out";
    int span = 2, sample = 200;
    uint64_t rat_seed = 0;
    rat->add_option("--dataset", rat_dataset, "Dataset root directory")->required();
    rat->add_option("--span", span, "Perturbation offsets run from -span to +span")
        ->check(CLI::PositiveNumber);
    rat->add_option("--sample", sample, "Eligible instances to sample")
        ->check(CLI::PositiveNumber);
    rat->add_option("--seed", rat_seed, "Sampling and perturbation seed");
    rat->add_option("--out-dir", rat_out, "Output directory");

    // fit-niqe
    auto* fit = app.add_subcommand("fit-niqe",
                                   "Fit the NIQE reference model on a pristine corpus");
    std::string fit_images, fit_out = "data/niqe/niqe_model_v1.txt";
    int patch = 96;
    double d0 = 25.0, min_sharpness = 0.75;
    fit->add_option("--images", fit_images, "Directory of pristine png/jpg images")
        ->required();
    fit->add_option("--out", fit_out, "Model output path");
    fit->add_option("--patch", patch, "Patch size in pixels");
    fit->add_option("--d0", d0, "Distance scale of the score mapping");
    fit->add_option("--min-sharpness", min_sharpness,
                    "Relative sharpness cutoff for fitting patches");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) {
            unim::runner::RunConfig config;
            config.dataset_root = dataset;
            config.responses_path = responses;
            config.support.model_id = model_id;
            config.support.modalities = parse_support(support_list);
            config.weights.eta_sqcs = eta_sqcs;
            config.weights.eta_ics = eta_ics;
            config.mock_judge = (judge_mode == "mock");
            config.seed = seed;
            config.backend.id = judge_mode;
            config.backend.endpoint = endpoint;
            config.backend.model = model_name;
            config.backend.credential_env = credential_env;
            config.backend.seed = seed;
            if (!group_by.empty()) config.group_by = group_by;
            config.filters = parse_filters(filter_pairs);
            config.jobs = jobs;
            config.out_dir = out_dir;
            config.rubric_dir = rubric_dir;
            config.niqe_model_path = niqe_path;
            config.threed_via_render = threed_via_render;
            config.caption_cache = !no_caption_cache;
            return run_command(config);
        }
        if (rat->parsed()) {
            return rationality_command(rat_dataset, span, sample, rat_seed, rat_out);
        }
        if (fit->parsed()) {
            return fit_niqe_command(fit_images, fit_out, patch, d0, min_sharpness);
        }
    } catch (const unim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const unim::IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const unim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
