#include <atsal/dataset.hpp>
#include <atsal/image_io.hpp>
#include <atsal/parallel.hpp>
#include <atsal/sphere.hpp>
#include <atsal/training.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace atsal {
namespace {

std::filesystem::path find_with_stem(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {".pgm", ".f32"}) {
    auto p = dir / (stem + ext);
    if (std::filesystem::exists(p))
      return p;
  }
  throw InputError("no .pgm or .f32 file for '" + stem + "' in '" + dir.string() + "'");
}

Tensor binarize(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = t[i] > 0.5f ? 1.0f : 0.0f;
  return out;
}

} // namespace

std::vector<TrainingSample> make_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                                   std::size_t height, std::size_t width) {
  if (height == 0 || width != 2 * height)
    throw ArgumentError("make_synthetic_dataset: grid must be 2:1");
  std::mt19937_64 rng(seed);
  std::vector<TrainingSample> out;
  const double px = 360.0 / static_cast<double>(width); // degrees per pixel
  for (std::size_t i = 0; i < count; ++i) {
    TrainingSample s;
    char name[32];
    std::snprintf(name, sizeof name, "%05zu", i);
    s.name = name;
    s.frame = Tensor(Shape{1, 3, height, width});
    for (float& v : s.frame.data())
      v = static_cast<float>(0.15 * uniform01(rng));

    std::vector<FixationRecord> records;
    const std::size_t blobs = 2 + static_cast<std::size_t>(uniform01(rng) * 2.0);
    for (std::size_t b = 0; b < blobs; ++b) {
      const double lon = -180.0 + 360.0 * uniform01(rng);
      const double lat = -50.0 + 100.0 * uniform01(rng);
      const double radius = (2.0 + 2.0 * uniform01(rng)) * px;
      const double hue = uniform01(rng);
      const float color[3] = {static_cast<float>(0.6 + 0.4 * hue), 0.7f,
                              static_cast<float>(1.0 - 0.4 * hue)};
      const SphericalPoint centre(lon * pi / 180.0, lat * pi / 180.0);
      for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
          const double d =
              geodesic_distance(centre, erp_pixel_to_sphere(r, c, height, width)) * 180.0 / pi;
          const float g = static_cast<float>(std::exp(-d * d / (2.0 * radius * radius)));
          for (std::size_t ch = 0; ch < 3; ++ch)
            s.frame(0, ch, r, c) = std::min(1.0f, s.frame(0, ch, r, c) + g * color[ch]);
        }
      for (std::size_t o = 0; o < 4; ++o) {
        FixationRecord rec;
        rec.video_id = "synthetic";
        rec.frame_index = i;
        rec.observer_id = std::to_string(o);
        rec.lon_deg = lon + (uniform01(rng) - 0.5) * radius;
        rec.lat_deg = std::clamp(lat + (uniform01(rng) - 0.5) * radius, -90.0, 90.0);
        if (rec.lon_deg >= 180.0)
          rec.lon_deg -= 360.0;
        if (rec.lon_deg < -180.0)
          rec.lon_deg += 360.0;
        records.push_back(rec);
      }
    }
    const FixMap fix = rasterize_fixations(records, height, width);
    s.fixations = fix.grid;
    s.saliency = blur_fixations(fix);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainingSample> load_training_set(const std::filesystem::path& dir) {
  const auto frames_dir = dir / "frames";
  if (!std::filesystem::is_directory(frames_dir))
    throw InputError("training set: missing directory '" + frames_dir.string() + "'");
  std::set<std::filesystem::path> frame_files;
  for (const auto& e : std::filesystem::directory_iterator(frames_dir))
    if (e.is_regular_file())
      frame_files.insert(e.path());
  std::vector<TrainingSample> out;
  for (const auto& path : frame_files) {
    TrainingSample s;
    s.name = path.stem().string();
    s.frame = as_rgb(load_image(path));
    s.saliency = load_salmap(find_with_stem(dir / "saliency", s.name));
    s.fixations = binarize(load_salmap(find_with_stem(dir / "fixation", s.name)));
    const Shape fs = s.frame.shape();
    if (s.saliency.shape() != Shape{1, 1, fs.h, fs.w} || s.fixations.shape() != s.saliency.shape())
      throw InputError("training set: '" + s.name + "' has mismatched frame/saliency/fixation sizes");
    out.push_back(std::move(s));
  }
  if (out.empty())
    throw InputError("training set: no frames in '" + frames_dir.string() + "'");
  return out;
}

void save_training_set(const std::filesystem::path& dir, const std::vector<TrainingSample>& samples) {
  for (const char* sub : {"frames", "saliency", "fixation"})
    std::filesystem::create_directories(dir / sub);
  for (const TrainingSample& s : samples) {
    save_image(dir / "frames" / (s.name + ".ppm"), s.frame);
    save_image(dir / "saliency" / (s.name + ".f32"), s.saliency);
    save_image(dir / "fixation" / (s.name + ".pgm"), s.fixations);
  }
}

ToyTrainer::ToyTrainer(std::vector<TrainingSample> samples, TrainConfig config)
    : ToyTrainer(std::move(samples), config,
                 init_attention_weights(config.seed, config.width_divisor)) {}

ToyTrainer::ToyTrainer(std::vector<TrainingSample> samples, TrainConfig config, WeightStore initial)
    : config_(config), nets_(attention_networks(config.width_divisor)),
      weights_(std::move(initial)) {
  if (samples.empty())
    throw InputError("ToyTrainer: empty training set");
  if (!(config.lr > 0.0))
    throw ArgumentError("ToyTrainer: learning rate must be positive");
  for (TrainingSample& s : samples) {
    const Shape fs = s.frame.shape();
    if (fs.n != 1 || fs.c != 3 || fs.h % 16 != 0 || fs.w % 16 != 0)
      throw DimensionError("ToyTrainer: '" + s.name +
                           "' frames must be 1x3xHxW with H and W multiples of 16, got " +
                           fs.str());
    Prepared p;
    p.mask_target = mask_target(s.saliency, fs.h / 16, fs.w / 16);
    p.frame = std::move(s.frame);
    p.fixations = std::move(s.fixations);
    p.saliency = std::move(s.saliency);
    samples_.push_back(std::move(p));
  }
}

double ToyTrainer::evaluate() const {
  std::vector<double> losses(samples_.size());
  parallel_for(samples_.size(), [&](std::size_t i) {
    const Prepared& p = samples_[i];
    Eager<float> ops(weights_);
    const auto out = forward_attention(ops, nets_, p.frame);
    SupervisionPack pack{out.saliency, out.mask, p.fixations, p.saliency, p.mask_target};
    losses[i] = total_loss(pack, config_.weights, config_.eps).total;
  });
  double sum = 0.0;
  for (const double l : losses)
    sum += l;
  return sum / static_cast<double>(losses.size());
}

double ToyTrainer::step() {
  std::vector<double> losses(samples_.size());
  std::vector<WeightStore> grads(samples_.size());
  parallel_for(samples_.size(), [&](std::size_t i) {
    const Prepared& p = samples_[i];
    Tape<float> tape(weights_);
    const auto out = forward_attention(tape, nets_, tape.constant(p.frame));
    const LossVars loss = total_loss(tape, out.saliency, out.mask, p.fixations, p.saliency,
                                     p.mask_target, config_.weights, config_.eps);
    losses[i] = tape.value(loss.total)[0];
    tape.backward(loss.total);
    grads[i] = tape.param_grads();
  });
  WeightStore mean = std::move(grads[0]);
  for (std::size_t i = 1; i < grads.size(); ++i)
    for (auto& [key, g] : mean) {
      const Tensor& other = grads[i].at(key);
      for (std::size_t k = 0; k < g.size(); ++k)
        g[k] += other[k];
    }
  const float inv = 1.0f / static_cast<float>(grads.size());
  for (auto& [key, g] : mean)
    for (float& v : g.data())
      v *= inv;
  adam_.step(weights_, mean, config_.lr, ++t_);
  double sum = 0.0;
  for (const double l : losses)
    sum += l;
  return sum / static_cast<double>(losses.size());
}

TrainResult train(std::vector<TrainingSample> samples, const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& log) {
  ToyTrainer trainer(std::move(samples), config);
  TrainResult result;
  for (std::size_t s = 0; s < config.steps; ++s) {
    result.losses.push_back(trainer.step());
    if (log)
      log(s, result.losses.back());
  }
  result.losses.push_back(trainer.evaluate());
  if (log)
    log(config.steps, result.losses.back());
  result.weights = trainer.weights();
  return result;
}

} // namespace atsal
