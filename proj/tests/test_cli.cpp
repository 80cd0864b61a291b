#include <doctest.h>

#include "test_support.hpp"

#include <atsal/attention.hpp>
#include <atsal/cli.hpp>
#include <atsal/expert.hpp>
#include <atsal/image_io.hpp>
#include <atsal/weights.hpp>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>

using namespace atsal;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Smooth RGB test pattern, so the projection round trip is well sampled.
Tensor smooth_erp(std::size_t h) {
  Tensor t(Shape{1, 3, h, 2 * h});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t x = 0; x < 2 * h; ++x) {
        const double lon = 2 * pi * (double(x) + 0.5) / double(2 * h);
        const double lat = pi * (double(r) + 0.5) / double(h);
        t(0, c, r, x) = float(0.5 + 0.3 * std::sin(lat) * std::cos(lon + double(c)) +
                              0.15 * std::cos(2 * lat));
      }
  return t;
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == exit_usage);
  CHECK(run({"frobnicate"}).code == exit_usage);
  const Run missing = run({"eval", "--pred", "x"});
  CHECK(missing.code == exit_usage);
  CHECK(missing.err.find("--gt-sal") != std::string::npos);
  CHECK(run({"fixations", "-g", "/nonexistent.csv", "-o", "/tmp/x"}).code == exit_usage);
  CHECK(run({"fixations", "-g", "a", "-o", "b", "--resolution", "2048by1024"}).code == exit_usage);
  CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("rf prints the three receptive fields") {
  const Run r = run({"rf"});
  REQUIRE(r.code == exit_ok);
  CHECK(r.out.find("stock VGG-16 through pool5: 212\n") != std::string::npos);
  CHECK(r.out.find("modified encoder: 244\n") != std::string::npos);
  CHECK(r.out.find("encoder + attention module: 676\n") != std::string::npos);

  testing::TempDir dir;
  {
    std::ofstream spec(dir / "tiny.spec");
    write_spec(spec, build_vgg16_spec());
  }
  const Run custom = run({"rf", "--spec", (dir / "tiny.spec").string()});
  CHECK(custom.code == exit_ok);
  CHECK(custom.out.find("final receptive field: 212") != std::string::npos);
}

TEST_CASE("project round trip") {
  testing::TempDir dir;
  save_image(dir / "erp.f32", smooth_erp(128));
  const Run a = run({"project", "erp2cmp", "-i", (dir / "erp.f32").string(), "-o",
                     (dir / "faces").string(), "--face-size", "64", "--format", "f32"});
  REQUIRE(a.code == exit_ok);
  for (int i = 0; i < 6; ++i)
    CHECK(fs::exists(dir / "faces" / ("face" + std::to_string(i) + ".f32")));
  const Run b = run({"project", "cmp2erp", "-i", (dir / "faces").string(), "-o",
                     (dir / "back.f32").string(), "--height", "128", "--reference",
                     (dir / "erp.f32").string()});
  REQUIRE(b.code == exit_ok);
  const auto pos = b.out.find("PSNR: ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(b.out.substr(pos + 6)) >= 30.0);

  const Run missing = run({"project", "cmp2erp", "-i", (dir / "nowhere").string(), "-o",
                           (dir / "x.f32").string()});
  CHECK(missing.code == exit_usage);
}

TEST_CASE("fixations then eval of the ground truth against itself") {
  testing::TempDir dir;
  {
    std::ofstream csv(dir / "gaze.csv");
    csv << "video_id,frame_index,observer_id,lon_deg,lat_deg\n";
    csv << "v1,0,a,10.0,5.0\nv1,0,b,-40.0,20.0\nv1,1,a,90.0,-30.0\nv1,1,b,not-a-number,0.0\n";
  }
  const Run f = run({"fixations", "-g", (dir / "gaze.csv").string(), "-o", (dir / "data").string(),
                     "--resolution", "128x64"});
  REQUIRE(f.code == exit_ok);
  CHECK(f.out.find("frames: 2") != std::string::npos);
  CHECK(f.err.find(":5:") != std::string::npos);
  const fs::path video = dir / "data" / "v1";
  REQUIRE(fs::exists(video / "saliency" / "00000.pgm"));
  REQUIRE(fs::exists(video / "fixation" / "00001.pgm"));

  const Run e = run({"eval", "--pred", (video / "saliency").string(), "--gt-sal",
                     (video / "saliency").string(), "--gt-fix", (video / "fixation").string()});
  REQUIRE(e.code == exit_ok);
  CHECK(e.out.rfind("frame,auc_j,nss,cc,sim,kld", 0) == 0);
  const auto mean = e.out.find("MEAN,");
  REQUIRE(mean != std::string::npos);
  std::vector<std::string> cells;
  std::stringstream row(e.out.substr(mean));
  for (std::string cell; std::getline(row, cell, ',');)
    cells.push_back(cell);
  REQUIRE(cells.size() == 6);
  CHECK(cells[3] == "1.000000");
  CHECK(cells[4] == "1.000000");

  fs::create_directories(dir / "empty");
  CHECK(run({"eval", "--pred", (dir / "empty").string(), "--gt-sal", (video / "saliency").string(),
             "--gt-fix", (video / "fixation").string()})
            .code == exit_usage);
}

TEST_CASE("infer writes one map per frame") {
  testing::TempDir dir;
  const std::size_t div = 8;
  WeightStore w = init_attention_weights(1, div);
  w.merge(init_expert_weights(2, div));
  save_weights(dir / "w.atsw", w);
  std::mt19937_64 rng(7);
  fs::create_directories(dir / "frames");
  for (int k = 0; k < 3; ++k)
    save_image(dir / "frames" / ("f" + std::to_string(k) + ".pgm"),
               testing::random_tensor(Shape{1, 3, 80, 160}, rng, 0, 1));
  const Run r = run({"infer", "--frames", (dir / "frames").string(), "--weights",
                     (dir / "w.atsw").string(), "-o", (dir / "out").string(), "--width-divisor", "8",
                     "--face-size", "32", "--format", "f32"});
  REQUIRE(r.code == exit_ok);
  for (int k = 0; k < 3; ++k) {
    const Tensor m = load_image(dir / "out" / ("f" + std::to_string(k) + ".f32"));
    CHECK(m.shape() == Shape{1, 1, 80, 160});
  }

  save_weights(dir / "att.atsw", select_prefix(w, attention_prefix));
  const Run lacking = run({"infer", "--frames", (dir / "frames").string(), "--weights",
                           (dir / "att.atsw").string(), "-o", (dir / "o2").string(),
                           "--width-divisor", "8"});
  CHECK(lacking.code == exit_usage);
  CHECK(lacking.err.find(poles_prefix) != std::string::npos);
  CHECK(run({"infer", "--frames", (dir / "frames").string(), "--weights", (dir / "att.atsw").string(),
             "-o", (dir / "o3").string(), "--width-divisor", "8", "--stream", "attention"})
            .code == exit_ok);
}

TEST_CASE("train is deterministic for a fixed seed") {
  testing::TempDir dir;
  const auto train = [&](const std::string& name, const std::string& steps) {
    return run({"train", "--synthetic", "2", "--resolution", "160x80", "--steps", steps, "--seed",
                "4", "-o", (dir / name).string()});
  };
  const Run zero = train("zero.atsw", "0");
  REQUIRE(zero.code == exit_ok);
  CHECK(zero.out.find("ratio 1.0000") != std::string::npos);
  CHECK(load_weights(dir / "zero.atsw").size() ==
        init_attention_weights(4).size() + init_expert_weights(4).size());

  const Run a = train("a.atsw", "3");
  const Run b = train("b.atsw", "3");
  REQUIRE(a.code == exit_ok);
  CHECK(a.out == b.out);
  CHECK(slurp(dir / "a.atsw") == slurp(dir / "b.atsw"));
  CHECK(slurp(dir / "a.atsw") != slurp(dir / "zero.atsw"));

  CHECK(run({"train", "-o", (dir / "x.atsw").string()}).code == exit_usage);
}

#ifdef ATSAL_CLI_PATH
TEST_CASE("installed binary reports exit codes") {
  const std::string bin = ATSAL_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(bin + " rf") == exit_ok);
  CHECK(status(bin + " bogus") == exit_usage);
  CHECK(status(bin) == exit_usage);
}
#endif
