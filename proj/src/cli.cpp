#include <atsal/attention.hpp>
#include <atsal/cli.hpp>
#include <atsal/dataset.hpp>
#include <atsal/expert.hpp>
#include <atsal/image_io.hpp>
#include <atsal/metrics.hpp>
#include <atsal/network.hpp>
#include <atsal/parallel.hpp>
#include <atsal/sphere.hpp>
#include <atsal/training.hpp>
#include <atsal/weights.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

namespace fs = std::filesystem;

namespace atsal {
namespace {

struct Resolution {
  std::size_t width = 0;
  std::size_t height = 0;
};

// "WxH", e.g. 2048x1024.
Resolution parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos)
      throw std::invalid_argument(text);
    std::size_t used = 0;
    Resolution r;
    r.width = std::stoul(text.substr(0, x), &used);
    if (used != x)
      throw std::invalid_argument(text);
    const std::string h = text.substr(x + 1);
    r.height = std::stoul(h, &used);
    if (used != h.size() || r.width == 0 || r.height == 0)
      throw std::invalid_argument(text);
    return r;
  } catch (const std::logic_error&) {
    throw ArgumentError("resolution '" + text + "' is not of the form WIDTHxHEIGHT");
  }
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string image_extension(const std::string& format) { return format == "f32" ? ".f32" : ".pgm"; }

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw InputError("not a directory: '" + dir.string() + "'");
  std::set<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file())
      files.insert(e.path());
  return {files.begin(), files.end()};
}

// ---- project ----------------------------------------------------------------

struct ProjectOptions {
  std::string direction;
  std::string input;
  std::string output;
  std::size_t face_size = default_face_size;
  std::size_t height = 320;
  std::string reference;
  std::string format = "pgm";
};

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("psnr: shape " + a.shape().str() + " vs reference " + b.shape().str());
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  return mse > 0.0 ? 10.0 * std::log10(1.0 / mse) : INFINITY;
}

int cmd_project(const ProjectOptions& o, std::ostream& out) {
  const std::string ext = image_extension(o.format);
  if (o.direction == "erp2cmp") {
    const Tensor erp = load_image(o.input);
    const CubeFaces faces = erp_to_cmp(erp, o.face_size);
    fs::create_directories(o.output);
    for (std::size_t i = 0; i < cube_face_count; ++i)
      save_image(fs::path(o.output) / ("face" + std::to_string(i) + ext), faces.faces[i]);
    out << "wrote 6 faces of " << o.face_size << "x" << o.face_size << " to " << o.output << '\n';
    return exit_ok;
  }
  CubeFaces faces;
  for (std::size_t i = 0; i < cube_face_count; ++i) {
    const fs::path base = fs::path(o.input) / ("face" + std::to_string(i));
    fs::path p = base;
    p += ".pgm";
    if (!fs::exists(p)) {
      p = base;
      p += ".f32";
    }
    if (!fs::exists(p))
      throw InputError("missing cube face " + std::to_string(i) + " (" + base.string() +
                       ".pgm or .f32)");
    faces.faces[i] = load_image(p);
  }
  faces.validate();
  const Tensor erp = cmp_to_erp(faces, o.height, 2 * o.height);
  save_image(o.output, erp);
  out << "wrote " << 2 * o.height << "x" << o.height << " ERP to " << o.output << '\n';
  if (!o.reference.empty())
    out << "PSNR: " << fmt("%.2f", psnr(erp, load_image(o.reference))) << " dB\n";
  return exit_ok;
}

// ---- fixations --------------------------------------------------------------

struct FixationOptions {
  std::string gaze;
  std::string out;
  double sigma = default_sigma_deg;
  std::string resolution = "2048x1024";
  std::string format = "pgm";
};

int cmd_fixations(const FixationOptions& o, std::ostream& out, std::ostream& err) {
  const Resolution res = parse_resolution(o.resolution);
  std::ifstream in(o.gaze);
  if (!in)
    throw InputError("cannot open '" + o.gaze + "'");
  const ParsedFixations parsed = parse_fixations(in);
  for (const ParseIssue& issue : parsed.issues)
    err << o.gaze << ":" << issue.line << ": skipped: " << issue.message << '\n';
  const auto groups = group_by_frame(parsed.records);
  std::vector<std::pair<FrameKey, const std::vector<FixationRecord>*>> frames;
  for (const auto& [key, records] : groups)
    frames.emplace_back(key, &records);
  parallel_for(frames.size(), [&](std::size_t i) {
    const auto& [key, records] = frames[i];
    const fs::path video = fs::path(o.out) / key.first;
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05zu", key.second);
    const FixMap fix = rasterize_fixations(*records, res.height, res.width);
    const Tensor sal = blur_fixations(fix, o.sigma);
    fs::create_directories(video / "fixation");
    fs::create_directories(video / "saliency");
    save_salmap(fix.grid, video / "fixation" / (std::string(stem) + ".pgm"));
    save_salmap(sal, video / "saliency" / (stem + image_extension(o.format)));
  });
  out << "frames: " << frames.size() << ", records: " << parsed.records.size()
      << ", skipped: " << parsed.issues.size() << '\n';
  return exit_ok;
}

// ---- eval -------------------------------------------------------------------

struct EvalCliOptions {
  std::string pred;
  std::string gt_sal;
  std::string gt_fix;
  std::string out;
  bool spherical = false;
  double eps = default_eps;
};

int cmd_eval(const EvalCliOptions& o, std::ostream& out, std::ostream& err) {
  EvalOptions options;
  options.spherical_weights = o.spherical;
  options.eps = o.eps;
  const MetricReport report = evaluate_run(o.pred, o.gt_sal, o.gt_fix, options);
  if (o.out.empty()) {
    write_csv(out, report);
  } else {
    std::ofstream file(o.out);
    if (!file)
      throw InputError("cannot write '" + o.out + "'");
    write_csv(file, report);
  }
  err << "frames: " << report.frames.size() << ", valid: " << report.valid_frames()
      << ", unreadable: " << report.unreadable << ", skipped per metric:";
  for (std::size_t m = 0; m < metric_count; ++m)
    err << ' ' << metric_names[m] << '=' << report.skipped[m];
  err << '\n';
  if (report.valid_frames() == 0) {
    err << "error: no frame produced a valid metric\n";
    return exit_usage;
  }
  return exit_ok;
}

// ---- rf ---------------------------------------------------------------------

void print_rf_table(std::ostream& out, const std::string& title, const NetworkSpec& spec) {
  out << "# " << title << '\n';
  out << "layer  kind      name         rf         jump\n";
  for (const ReceptiveFieldRow& row : receptive_field(spec)) {
    char line[160];
    const std::string rf = std::to_string(row.rf_rows) + "x" + std::to_string(row.rf_cols);
    std::snprintf(line, sizeof line, "%-6zu %-9s %-12s %-10s %g\n", row.index, to_string(row.kind),
                  row.name.empty() ? "-" : row.name.c_str(), rf.c_str(), row.jump_rows);
    out << line;
  }
}

std::size_t final_conv_rf(const NetworkSpec& spec) {
  std::size_t rf = 0;
  for (const ReceptiveFieldRow& row : receptive_field(spec))
    if (row.kind == LayerKind::conv || row.kind == LayerKind::maxpool)
      rf = row.rf_rows;
  return rf;
}

int cmd_rf(const std::string& spec_path, std::ostream& out) {
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in)
      throw InputError("cannot open '" + spec_path + "'");
    const NetworkSpec spec = read_spec(in);
    print_rf_table(out, spec.name, spec);
    out << "final receptive field: " << final_conv_rf(spec) << '\n';
    return exit_ok;
  }
  const NetworkSpec vgg = build_vgg16_spec();
  const NetworkSpec encoder = build_encoder_spec();
  const NetworkSpec full = concat(encoder, build_attention_spec());
  print_rf_table(out, "stock VGG-16 through pool5", vgg);
  out << '\n';
  print_rf_table(out, "modified encoder", encoder);
  out << '\n';
  print_rf_table(out, "encoder + attention module", full);
  out << '\n';
  out << "stock VGG-16 through pool5: " << final_conv_rf(vgg) << '\n';
  out << "modified encoder: " << final_conv_rf(encoder) << '\n';
  out << "encoder + attention module: " << final_conv_rf(full) << '\n';
  return exit_ok;
}

// ---- infer ------------------------------------------------------------------

struct InferOptions {
  std::string frames;
  std::string weights;
  std::string out;
  std::string stream = "fused";
  std::size_t width_divisor = 1;
  std::size_t face_size = default_face_size;
  double alpha = default_ema_alpha;
  std::string format = "pgm";
};

int cmd_infer(const InferOptions& o, std::ostream& out, std::ostream& err) {
  const WeightStore weights = load_weights(o.weights);
  std::vector<std::string> needed;
  if (o.stream != "experts")
    needed.push_back(attention_prefix);
  if (o.stream != "attention") {
    needed.push_back(poles_prefix);
    needed.push_back(equator_prefix);
  }
  const auto missing = missing_prefixes(weights, needed);
  if (!missing.empty()) {
    err << "error: weight file '" << o.weights << "' lacks prefixes:";
    for (const std::string& p : missing)
      err << ' ' << p;
    err << '\n';
    return exit_usage;
  }
  const auto files = sorted_files(o.frames);
  if (files.empty())
    throw InputError("no frames in '" + o.frames + "'");
  fs::create_directories(o.out);
  ExpertStream experts(weights, o.width_divisor, o.alpha);
  for (const fs::path& file : files) {
    const Tensor frame = as_rgb(load_image(file));
    const Shape s = frame.shape();
    Tensor result;
    if (o.stream == "attention") {
      result = forward_attention(frame, weights, o.width_divisor).saliency;
    } else {
      Tensor y2 = cmp_to_erp(experts.step(erp_to_cmp(frame, o.face_size)), s.h, s.w);
      result = o.stream == "experts"
                   ? std::move(y2)
                   : fuse(forward_attention(frame, weights, o.width_divisor).saliency, y2);
    }
    save_salmap(result, fs::path(o.out) / (file.stem().string() + image_extension(o.format)));
  }
  out << "wrote " << files.size() << " " << o.stream << " maps to " << o.out << '\n';
  return exit_ok;
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::size_t synthetic = 0;
  std::string resolution = "160x80";
  std::string out;
  std::string save_data;
  TrainConfig config;
};

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<TrainingSample> samples;
  if (o.synthetic > 0) {
    const Resolution res = parse_resolution(o.resolution);
    samples = make_synthetic_dataset(o.synthetic, o.config.seed, res.height, res.width);
    if (!o.save_data.empty())
      save_training_set(o.save_data, samples);
  } else if (!o.data.empty()) {
    samples = load_training_set(o.data);
  } else {
    throw ArgumentError("train: pass --data DIR or --synthetic N");
  }
  const TrainResult result = train(std::move(samples), o.config, [&](std::size_t step, double loss) {
    out << "step " << step << " loss " << fmt("%.6f", loss) << '\n';
  });
  WeightStore store = result.weights;
  // The toy objective trains the attention stream; experts are written at
  // their initialization so the file serves every inference stream.
  for (auto& [key, value] : init_expert_weights(o.config.seed, o.config.width_divisor))
    store.emplace(key, std::move(value));
  save_weights(o.out, store);
  const double initial = result.losses.front();
  const double final_loss = result.losses.back();
  out << "initial loss " << fmt("%.6f", initial) << ", final loss " << fmt("%.6f", final_loss)
      << ", ratio " << fmt("%.4f", final_loss / initial) << '\n';
  if (o.config.steps > 0 && !(final_loss < initial)) {
    err << "error: training did not reduce the loss\n";
    return exit_internal;
  }
  return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Omnidirectional video saliency toolkit", "atsal"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  ProjectOptions project;
  auto* project_cmd = app.add_subcommand("project", "ERP <-> cubemap projection");
  project_cmd->add_option("direction", project.direction, "erp2cmp or cmp2erp")
      ->required()
      ->check(CLI::IsMember({"erp2cmp", "cmp2erp"}));
  project_cmd->add_option("-i,--input", project.input, "ERP image, or directory of face0..5")
      ->required();
  project_cmd->add_option("-o,--output", project.output, "face directory, or ERP image path")
      ->required();
  project_cmd->add_option("--face-size", project.face_size, "cube face size in pixels")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 15));
  project_cmd->add_option("--height", project.height, "ERP rows for cmp2erp (width = 2*height)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  project_cmd->add_option("--reference", project.reference, "report PSNR against this ERP image");
  project_cmd->add_option("--format", project.format, "output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"pgm", "f32"}));

  FixationOptions fixations;
  auto* fix_cmd = app.add_subcommand("fixations", "gaze CSV -> fixation and saliency maps");
  fix_cmd->add_option("-g,--gaze", fixations.gaze, "gaze CSV file")->required();
  fix_cmd->add_option("-o,--out", fixations.out, "output dataset directory")->required();
  fix_cmd->add_option("--sigma", fixations.sigma, "Gaussian sigma in degrees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fix_cmd->add_option("--resolution", fixations.resolution, "WIDTHxHEIGHT")->capture_default_str();
  fix_cmd->add_option("--format", fixations.format, "saliency map format")
      ->capture_default_str()
      ->check(CLI::IsMember({"pgm", "f32"}));

  EvalCliOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "prediction directory")->required();
  eval_cmd->add_option("--gt-sal", eval.gt_sal, "ground-truth saliency directory")->required();
  eval_cmd->add_option("--gt-fix", eval.gt_fix, "ground-truth fixation directory")->required();
  eval_cmd->add_option("--out", eval.out, "CSV output path (default stdout)");
  eval_cmd->add_flag("--spherical-weights", eval.spherical,
                     "weight NSS/CC/SIM/KLD by cos(latitude)");
  eval_cmd->add_option("--eps", eval.eps, "KLD epsilon")->capture_default_str();

  std::string rf_spec;
  auto* rf_cmd = app.add_subcommand("rf", "receptive-field tables");
  rf_cmd->add_option("--spec", rf_spec, "network spec text file to analyse instead");

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "run the saliency streams over a frame directory");
  infer_cmd->add_option("--frames", infer.frames, "frame directory (filename order)")->required();
  infer_cmd->add_option("--weights", infer.weights, "ATSW weight file")->required();
  infer_cmd->add_option("-o,--out", infer.out, "output directory")->required();
  infer_cmd->add_option("--stream", infer.stream, "attention, experts or fused")
      ->capture_default_str()
      ->check(CLI::IsMember({"attention", "experts", "fused"}));
  infer_cmd->add_option("--width-divisor", infer.width_divisor, "channel width divisor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  infer_cmd->add_option("--face-size", infer.face_size, "cube face size")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{8}, std::size_t{4096}));
  infer_cmd->add_option("--ema-alpha", infer.alpha, "EMA coefficient")
      ->capture_default_str()
      ->check(CLI::Range(1e-9, 1.0));
  infer_cmd->add_option("--format", infer.format, "output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"pgm", "f32"}));

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "toy-scale training of the attention stream");
  auto* data_opt = train_cmd->add_option("--data", train_opts.data,
                                         "directory with frames/, saliency/, fixation/");
  train_cmd->add_option("--synthetic", train_opts.synthetic, "generate N synthetic pairs instead")
      ->excludes(data_opt);
  train_cmd->add_option("--resolution", train_opts.resolution, "synthetic WIDTHxHEIGHT")
      ->capture_default_str();
  train_cmd->add_option("--save-data", train_opts.save_data, "write the synthetic set here");
  train_cmd->add_option("-o,--out", train_opts.out, "output ATSW weight file")->required();
  train_cmd->add_option("--steps", train_opts.config.steps, "Adam steps")->capture_default_str();
  train_cmd->add_option("--lr", train_opts.config.lr, "learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_opts.config.seed, "seed for init and synthetic data")
      ->capture_default_str();
  train_cmd->add_option("--width-divisor", train_opts.config.width_divisor, "channel width divisor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--alpha1", train_opts.config.weights.alpha1, "KL(Y1, Q1) weight")
      ->capture_default_str();
  train_cmd->add_option("--alpha2", train_opts.config.weights.alpha2, "NSS weight")
      ->capture_default_str();
  train_cmd->add_option("--beta", train_opts.config.weights.beta, "KL(M, Q2) weight")
      ->capture_default_str();
  train_cmd->add_option("--eps", train_opts.config.eps, "KL epsilon")->capture_default_str();

  std::vector<std::string> argv_store{"atsal"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : argv_store)
    argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands())
      sub = s;
    err << "error: " << e.what() << "\n\n" << (sub ? sub->help() : app.help());
    return exit_usage;
  }

  try {
    if (*project_cmd)
      return cmd_project(project, out);
    if (*fix_cmd)
      return cmd_fixations(fixations, out, err);
    if (*eval_cmd)
      return cmd_eval(eval, out, err);
    if (*rf_cmd)
      return cmd_rf(rf_spec, out);
    if (*infer_cmd)
      return cmd_infer(infer, out, err);
    if (*train_cmd)
      return cmd_train(train_opts, out, err);
  } catch (const StateError& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_internal;
}

} // namespace atsal
