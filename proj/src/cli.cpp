#include "medgrad/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "medgrad/checkpoint.hpp"
#include "medgrad/eval.hpp"
#include "medgrad/png.hpp"
#include "medgrad/render.hpp"
#include "medgrad/runconfig.hpp"
#include "medgrad/util.hpp"

namespace fs = std::filesystem;

namespace medgrad {

namespace {

Dataset load_split(const std::string& dir, const RunConfig& cfg, const std::string& which) {
    Dataset ds = load_dataset(dir, cfg.model.image_size,
                              static_cast<std::size_t>(cfg.model.context_length));
    if (which == "all") return ds;
    auto split = split_dataset(ds, cfg.train.split_fraction, cfg.train.seed);
    for (const auto& w : split.warnings) log_warn(w);
    return ds.subset(which == "train" ? split.train : split.test);
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    Dataset ds = generate_dataset(cfg.data.n_pairs, cfg.data.k_classes, cfg.train.seed,
                                  cfg.model.image_size,
                                  static_cast<std::size_t>(cfg.model.context_length),
                                  cfg.threads);
    save_dataset(ds, out_dir, cfg.threads);
    std::cout << "wrote " << ds.items.size() << " pairs (" << cfg.data.k_classes
              << " classes) to " << out_dir << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_ckpt,
              const std::string& log_path) {
    Dataset ds = load_dataset(data_dir, cfg.model.image_size,
                              static_cast<std::size_t>(cfg.model.context_length));
    if (ds.items.empty()) throw ContractError("train: dataset is empty");
    auto split = split_dataset(ds, cfg.train.split_fraction, cfg.train.seed);
    for (const auto& w : split.warnings) log_warn(w);
    Dataset train_set = ds.subset(split.train);
    log_info("training on " + std::to_string(train_set.size()) + " pairs, holding out " +
             std::to_string(split.test.size()));

    ModelConfig mc = cfg.model;
    mc.vocab_size = static_cast<int>(ds.vocab.size());
    ClipBundle bundle;
    bundle.model = ClipModel::init(mc, cfg.train.seed);
    bundle.vocab = ds.vocab;
    bundle.classes = ds.classes;

    std::ofstream log_file(log_path, std::ios::trunc);
    if (!log_file) throw IoError("cannot open training log for writing: " + log_path);

    TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.batch_size = cfg.train.batch_size;
    tc.lr = cfg.train.lr;
    tc.seed = cfg.train.seed;
    tc.augment = cfg.train.augment;
    train(bundle.model, train_set, tc, [&](const EpochLog& l) {
        log_file << "{\"epoch\": " << l.epoch << ", \"loss\": " << l.loss
                 << ", \"train_acc\": " << l.train_acc << "}\n";
        log_file.flush();
        log_info("epoch " + std::to_string(l.epoch) + " loss " + std::to_string(l.loss) +
                 " acc " + std::to_string(l.train_acc));
    });

    save_checkpoint(bundle, out_ckpt);
    std::cout << "checkpoint written to " << out_ckpt << " (params hash "
              << std::to_string(bundle.model.params_hash()) << ")\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path, const std::string& data_dir,
             const std::string& which, const std::string& out_path) {
    ClipBundle bundle = load_checkpoint(ckpt_path);
    RunConfig eff = cfg;
    eff.model = bundle.model.cfg;  // the checkpoint's geometry wins
    Dataset part = load_split(data_dir, eff, which);
    if (part.items.empty()) throw ContractError("eval: selected split is empty");

    auto [report, cm] = evaluate(bundle, part, cfg.train.batch_size, cfg.threads);
    const std::string text = metrics_to_json(report, cm);
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_file(out_path, std::vector<std::uint8_t>(text.begin(), text.end()));
        std::cout << "report written to " << out_path << "\n";
    }
    return 0;
}

int cmd_explain(const RunConfig& cfg, const std::string& ckpt_path, const std::string& image_path,
                const std::string& caption, const std::vector<std::string>& method_names,
                const std::string& out_path) {
    ClipBundle bundle = load_checkpoint(ckpt_path);
    Image image = png_decode_image(read_file(image_path));
    if (image.height != bundle.model.cfg.image_size || image.width != bundle.model.cfg.image_size)
        image = resize_bilinear(image, bundle.model.cfg.image_size, bundle.model.cfg.image_size);
    const TokenSeq tokens = bundle.vocab.encode(
        caption, static_cast<std::size_t>(bundle.model.cfg.context_length));

    std::vector<SaliencyMethod> methods;
    for (const auto& name : method_names) methods.push_back(method_from_name(name));

    Explanations all = explain_all(bundle.model, image, tokens, cfg.explain);
    std::vector<SaliencyMap> maps;
    std::vector<std::string> labels;
    for (auto m : methods) {
        SaliencyMap map = m == SaliencyMethod::MedGradEclip ? all.medgrad
                          : m == SaliencyMethod::GradEclip  ? all.grad_eclip
                                                            : all.grad_cam;
        map.caption = caption;
        maps.push_back(std::move(map));
        labels.push_back(method_name(m));
    }

    write_file(out_path, render_panel(image, maps, labels, cfg.explain.overlay_alpha));
    const std::string stem = out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".png"
                                 ? out_path.substr(0, out_path.size() - 4)
                                 : out_path;
    for (const auto& map : maps) {
        const std::string side = stem + "." + method_name(map.method) + ".json";
        const std::string text = saliency_to_json(map);
        write_file(side, std::vector<std::uint8_t>(text.begin(), text.end()));
    }
    std::cout << "panel written to " << out_path << " (" << maps.size() + 1 << " panels)\n";
    return 0;
}

int cmd_compare(const RunConfig& cfg, const std::string& ckpt_path, const std::string& data_dir,
                int n, const std::string& out_dir, const std::string& which) {
    ClipBundle bundle = load_checkpoint(ckpt_path);
    RunConfig eff = cfg;
    eff.model = bundle.model.cfg;
    Dataset part = load_split(data_dir, eff, which);
    if (part.items.empty()) throw ContractError("compare: selected split is empty");
    if (n > static_cast<int>(part.items.size())) {
        log_warn("requested " + std::to_string(n) + " images, split has only " +
                 std::to_string(part.items.size()) + "; clamping");
        n = static_cast<int>(part.items.size());
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);

    std::vector<std::size_t> order(part.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.train.seed);
    rng.shuffle(order.begin(), order.end());

    const std::vector<std::string> method_labels{"medgrad-eclip", "grad-eclip", "grad-cam"};
    for (int s = 0; s < n; ++s) {
        const auto& item = part.items[order[static_cast<std::size_t>(s)]];
        // columns: the class name, then each criterion on its own
        std::vector<std::string> captions{item.class_name};
        for (const auto& crit : item.criteria) captions.push_back(crit);

        std::vector<std::vector<SaliencyMap>> grid;
        for (const auto& caption : captions) {
            const TokenSeq tokens = bundle.vocab.encode(
                caption, static_cast<std::size_t>(bundle.model.cfg.context_length));
            Explanations all = explain_all(bundle.model, item.image, tokens, cfg.explain);
            all.medgrad.caption = caption;
            all.grad_eclip.caption = caption;
            all.grad_cam.caption = caption;
            grid.push_back({all.medgrad, all.grad_eclip, all.grad_cam});
        }
        auto [png, layout] = render_grid(item.image, captions, grid, method_labels,
                                         cfg.explain.overlay_alpha);
        const std::string path = (fs::path(out_dir) / ("compare-" + item.id + ".png")).string();
        write_file(path, png);
        std::cout << path << ": " << layout.rows << "x" << layout.cols << " grid (cell "
                  << layout.cell_w << "x" << layout.cell_h << ")\n";
    }
    return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
    ClipBundle bundle = load_checkpoint(ckpt_path);
    std::cout << "config: " << bundle.model.cfg.to_json_string() << "\n";
    std::cout << "vocab: " << bundle.vocab.size() << " tokens (" << bundle.vocab.words().size()
              << " words + 3 reserved)\n";
    std::cout << "classes: " << bundle.classes.size() << "\n";
    for (const auto& c : bundle.classes) std::cout << "  " << c.name << ": " << c.prompt << "\n";
    bundle.model.params.for_each([&](const std::string& name, const Tensorf& t) {
        std::cout << "  " << name << " " << shape_str(t.shape) << "\n";
    });
    std::cout << "total parameters: " << bundle.model.param_count() << "\n";
    std::cout << "params hash: " << bundle.model.params_hash() << "\n";
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"desk-scale CLIP-style dermoscopy classifier with entropy-weighted "
                 "gradient saliency"};
    app.require_subcommand(1);

    // --config is applied before flag overrides; pre-scan so every
    // subcommand default below reflects the file values
    RunConfig cfg;
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                cfg = RunConfig::from_file(args[i + 1]);
                break;
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", cfg.train.seed, "global RNG seed");
    app.add_option("--threads", cfg.threads, "worker threads for generation/evaluation");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dermoscopy dataset");
    std::string gen_out;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--n-pairs", cfg.data.n_pairs, "number of image/caption pairs");
    gen->add_option("--k-classes", cfg.data.k_classes, "number of lesion classes (2-17)");
    gen->add_option("--image-size", cfg.model.image_size, "raster size in pixels");

    // train
    auto* tr = app.add_subcommand("train", "train the dual encoder on a dataset directory");
    std::string tr_data, tr_out, tr_log;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--log", tr_log, "per-epoch JSONL log path (default <out>.log.jsonl)");
    tr->add_option("--epochs", cfg.train.epochs, "training epochs");
    tr->add_option("--batch-size", cfg.train.batch_size, "contrastive batch size");
    tr->add_option("--lr", cfg.train.lr, "Adam learning rate");
    tr->add_option("--split-fraction", cfg.train.split_fraction, "train fraction");
    tr->add_flag("--no-augment", "disable flip/rotate and caption-reorder augmentation");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string ev_ckpt, ev_data, ev_split = "test", ev_out;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--split", ev_split, "test | train | all")
        ->check(CLI::IsMember({"test", "train", "all"}));
    ev->add_option("--out", ev_out, "write the JSON report here instead of stdout");
    ev->add_option("--batch-size", cfg.train.batch_size, "evaluation batch size");

    // explain
    auto* ex = app.add_subcommand("explain", "render saliency overlays for one image");
    std::string ex_ckpt, ex_image, ex_caption, ex_out = "panel.png";
    std::vector<std::string> ex_methods{"medgrad-eclip", "grad-eclip", "grad-cam"};
    ex->add_option("--checkpoint", ex_ckpt, "checkpoint path")->required();
    ex->add_option("--image", ex_image, "input image (PNG)")->required();
    ex->add_option("--caption", ex_caption, "caption text to explain against")->required();
    ex->add_option("--methods", ex_methods,
                   "saliency methods, in panel order (medgrad-eclip grad-eclip grad-cam)")
        ->delimiter(',');
    ex->add_option("--out", ex_out, "output panel PNG");
    ex->add_option("--disk-radius", cfg.explain.disk_radius, "entropy disk radius (px)");
    ex->add_option("--bins", cfg.explain.bins, "entropy histogram bins");
    ex->add_option("--alpha", cfg.explain.overlay_alpha, "overlay opacity");

    // compare
    auto* cp = app.add_subcommand("compare",
                                  "method-by-caption saliency grids for sampled images");
    std::string cp_ckpt, cp_data, cp_out = "compare", cp_split = "test";
    int cp_n = 4;
    cp->add_option("--checkpoint", cp_ckpt, "checkpoint path")->required();
    cp->add_option("--data", cp_data, "dataset directory")->required();
    cp->add_option("--n", cp_n, "number of images to sample");
    cp->add_option("--out", cp_out, "output directory");
    cp->add_option("--split", cp_split, "test | train | all")
        ->check(CLI::IsMember({"test", "train", "all"}));

    // inspect-checkpoint
    auto* in = app.add_subcommand("inspect-checkpoint", "print checkpoint metadata");
    std::string in_ckpt;
    in->add_option("checkpoint", in_ckpt, "checkpoint path")->required();

    std::vector<const char*> argv;
    argv.push_back("medgrad");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        cfg.validate();
        if (gen->parsed()) return cmd_gen_data(cfg, gen_out);
        if (tr->parsed()) {
            if (tr->count("--no-augment")) cfg.train.augment = false;
            return cmd_train(cfg, tr_data, tr_out,
                             tr_log.empty() ? tr_out + ".log.jsonl" : tr_log);
        }
        if (ev->parsed()) return cmd_eval(cfg, ev_ckpt, ev_data, ev_split, ev_out);
        if (ex->parsed()) return cmd_explain(cfg, ex_ckpt, ex_image, ex_caption, ex_methods, ex_out);
        if (cp->parsed()) return cmd_compare(cfg, cp_ckpt, cp_data, cp_n, cp_out, cp_split);
        if (in->parsed()) return cmd_inspect(in_ckpt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace medgrad
