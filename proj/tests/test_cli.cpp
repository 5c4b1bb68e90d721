#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "test_support.hpp"

namespace valcs {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "valcs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::make_unique<detail::ScratchDirectory>(fs::temp_directory_path());
    write_y_sequence(path("seq.yuv"), testing::translating_sequence(9, 48, 64, 1.0), PixelFormat::kYuv420);
  }
  std::string path(const std::string& name) const { return (dir_->path() / name).string(); }

  std::unique_ptr<detail::ScratchDirectory> dir_;
};

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

TEST_F(Cli, EncodeDecodeMetricsReport) {
  auto r = run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48", "--gop", "4",
                "--delta-key", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("encoded 9 frames (3 key)"), std::string::npos) << r.out;

  r = run({"decode", "-i", path("s.bin"), "-o", path("dec")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count(r.out, "\nframe ") + (r.out.rfind("frame ", 0) == 0), 9u) << r.out;
  EXPECT_EQ(count(r.out, " key key-recon"), 3u);
  EXPECT_TRUE(fs::exists(path("dec/frame_00000.pgm")));
  EXPECT_TRUE(fs::exists(path("dec/frame_00008.pgm")));
  EXPECT_EQ(read_pgm(path("dec/frame_00004.pgm")).width(), 64u);

  r = run({"metrics", "--original", path("seq.yuv"), "--width", "64", "--height", "48", "--decoded", path("dec"),
           "--stream", path("s.bin"), "--csv", path("seq.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bytes = read_file_bytes(path("seq.csv"));
  const auto rows = parse_quality_csv(std::string(bytes.begin(), bytes.end()));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[4].kind, FrameKind::kKey);
  EXPECT_EQ(rows[5].kind, FrameKind::kNonKey);
  EXPECT_GT(rows[0].psnr, 25.0);

  r = run({"report", path("seq.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("seq "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Average "), std::string::npos) << r.out;
}

TEST_F(Cli, DerivedNonKeyRatioIsLogged) {
  const auto r = run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48", "--gop",
                      "8", "--delta-key", "0.7", "--delta-avg", "0.175"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("derived non-key ratio 0.1000"), std::string::npos) << r.out;
}

TEST_F(Cli, DecodeMatchesLibrary) {
  ASSERT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48", "--gop", "4",
                 "--delta-key", "0.5", "--alloc", "thi"})
                .code,
            0);
  ASSERT_EQ(run({"decode", "-i", path("s.bin"), "-o", path("dec"), "--td", "12"}).code, 0);
  LinearInterpolator linear;
  DecoderOptions opts;
  opts.bpd_threshold = 12.0;
  const auto frames = decode_sequence(read_stream_file(path("s.bin")), opts, linear);
  for (const auto& f : frames) {
    const Frame got = read_pgm(path("dec/" + cli::frame_file_name(f.index)));
    // PGM output is rounded to integers.
    EXPECT_LE(max_abs_difference(got, f.pixels), 0.5 + 1e-9) << f.index;
  }
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"encode", "-i", path("seq.yuv")}).code, 2);
  EXPECT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--delta-avg", "0.2", "--delta-nonkey", "0.1"})
                .code,
            2);
  EXPECT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--alloc", "greedy"}).code, 2);
  EXPECT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48",
                 "--delta-key", "0.1", "--delta-avg", "0.5"})
                .code,
            2);
  EXPECT_EQ(run({"decode", "-i", path("s.bin"), "-o", path("d"), "--interp", "external"}).code, 2);
  EXPECT_EQ(run({"decode", "-i", path("s.bin"), "-o", path("d"), "--recon", "ida", "--ida-damping", "2"}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("encode"), std::string::npos);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run({"encode", "-i", path("missing.yuv"), "-o", path("s.bin")}).code, 1);
  // 64x48 data read with the default CIF geometry is not a whole frame.
  EXPECT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin")}).code, 1);

  ASSERT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48", "--gop", "4",
                 "--delta-key", "0.5"})
                .code,
            0);
  EncodedStream s = read_stream_file(path("s.bin"));
  s.frames.erase(s.frames.begin());
  write_stream_file(path("bad.bin"), s);
  const auto r = run({"decode", "-i", path("bad.bin"), "-o", path("d")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("frame 0"), std::string::npos) << r.err;

  auto bytes = read_file_bytes(path("s.bin"));
  bytes.resize(bytes.size() - 3);
  write_file_bytes(path("short.bin"), bytes);
  EXPECT_EQ(run({"decode", "-i", path("short.bin"), "-o", path("d")}).code, 1);
  EXPECT_EQ(run({"report", path("seq.yuv")}).code, 1);
}

TEST_F(Cli, MetricsWithoutStreamUsesGop) {
  ASSERT_EQ(run({"encode", "-i", path("seq.yuv"), "-o", path("s.bin"), "--width", "64", "--height", "48", "--gop", "4",
                 "--delta-key", "0.5"})
                .code,
            0);
  ASSERT_EQ(run({"decode", "-i", path("s.bin"), "-o", path("dec")}).code, 0);
  const auto r = run({"metrics", "--original", path("seq.yuv"), "--width", "64", "--height", "48", "--decoded",
                      path("dec"), "--gop", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_quality_csv(r.out.substr(0, r.out.find("frames 9")));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[8].kind, FrameKind::kKey);
  EXPECT_EQ(rows[7].kind, FrameKind::kNonKey);
}

}  // namespace
}  // namespace valcs
