#include "avlab/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "avlab/error.hpp"

namespace avlab {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr std::array<char, 8> kCorpusMagic = {'A', 'V', 'L', 'C', 'O', 'R', 'P', '\0'};
constexpr std::array<char, 8> kCheckpointMagic = {'A', 'V', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

// Guards against absurd allocations when reading a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void pod(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void magic(const std::array<char, 8>& m) { out_.write(m.data(), m.size()); }

  template <class Derived>
  void matrix(const Eigen::PlainObjectBase<Derived>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  }

  void finish() {
    if (!out_) throw FormatError("write failed");
  }

private:
  std::ostream& out_;
};

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <class T>
  T pod() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw FormatError("unexpected end of file");
    return value;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }

  void magic(const std::array<char, 8>& expected, const char* what) {
    std::array<char, 8> got{};
    in_.read(got.data(), got.size());
    if (!in_ || got != expected) throw FormatError(std::string("not a ") + what + " file");
    const auto version = pod<std::uint32_t>();
    if (version != kVersion) throw FormatError(std::string("unsupported ") + what + " version " + std::to_string(version));
  }

  template <class Matrix>
  Matrix matrix() {
    const auto rows = u64();
    const auto cols = u64();
    if (rows > kMaxElements || cols > kMaxElements || rows * cols > kMaxElements)
      throw FormatError("matrix header is corrupt");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in_) throw FormatError("unexpected end of file");
    return m;
  }

private:
  std::istream& in_;
};

void write_config(Writer& w, const CorpusConfig& c) {
  for (std::uint64_t v : {std::uint64_t{c.num_contents}, std::uint64_t{c.min_snippets}, std::uint64_t{c.max_snippets},
                          std::uint64_t{c.sem_dim}, std::uint64_t{c.art_dim}, std::uint64_t{c.video_dim},
                          std::uint64_t{c.audio_dim}, std::uint64_t{c.num_classes}, std::uint64_t{c.sync_dim}, c.seed})
    w.u64(v);
  for (double v : {c.artifact_strength, c.temporal_rho, c.sync_strength, c.semantic_scale, c.noise_scale,
                   c.holdout_fraction})
    w.f64(v);
}

CorpusConfig read_config(Reader& r) {
  CorpusConfig c;
  c.num_contents = r.u64();
  c.min_snippets = r.u64();
  c.max_snippets = r.u64();
  c.sem_dim = r.u64();
  c.art_dim = r.u64();
  c.video_dim = r.u64();
  c.audio_dim = r.u64();
  c.num_classes = r.u64();
  c.sync_dim = r.u64();
  c.seed = r.u64();
  c.artifact_strength = r.f64();
  c.temporal_rho = r.f64();
  c.sync_strength = r.f64();
  c.semantic_scale = r.f64();
  c.noise_scale = r.f64();
  c.holdout_fraction = r.f64();
  return c;
}

template <class Stream>
Stream open(const std::filesystem::path& path) {
  Stream s(path, std::ios::binary);
  if (!s) throw FormatError("cannot open " + path.string());
  return s;
}

}  // namespace

void write_corpus(std::ostream& out, const Corpus& corpus) {
  Writer w(out);
  w.magic(kCorpusMagic);
  w.pod(kVersion);
  write_config(w, corpus.config());
  const auto& mix = corpus.mixing();
  w.matrix(mix.video_semantic);
  w.matrix(mix.video_artifact);
  w.matrix(mix.audio_semantic);
  w.matrix(mix.audio_artifact);
  w.matrix(mix.video_sync);
  w.matrix(mix.audio_sync);
  w.u64(corpus.num_contents());
  for (const Content& c : corpus.contents()) {
    w.u64(c.id);
    w.matrix(c.artifact);
    w.matrix(c.semantic);
    w.matrix(c.video);
    w.matrix(c.audio);
    w.u64(c.labels.size());
    for (int label : c.labels) w.pod(static_cast<std::int32_t>(label));
  }
  w.finish();
}

Corpus read_corpus(std::istream& in) {
  Reader r(in);
  r.magic(kCorpusMagic, "corpus");
  CorpusConfig config = read_config(r);
  MixingMatrices mix;
  mix.video_semantic = r.matrix<Eigen::MatrixXd>();
  mix.video_artifact = r.matrix<Eigen::MatrixXd>();
  mix.audio_semantic = r.matrix<Eigen::MatrixXd>();
  mix.audio_artifact = r.matrix<Eigen::MatrixXd>();
  mix.video_sync = r.matrix<Eigen::MatrixXd>();
  mix.audio_sync = r.matrix<Eigen::MatrixXd>();

  const auto n = r.u64();
  if (n != config.num_contents) throw FormatError("content count does not match the embedded config");
  std::vector<Content> contents(n);
  for (auto& c : contents) {
    c.id = r.u64();
    c.artifact = r.matrix<Eigen::VectorXd>();
    c.semantic = r.matrix<FeatureMatrix>();
    c.video = r.matrix<FeatureMatrix>();
    c.audio = r.matrix<FeatureMatrix>();
    const auto labels = r.u64();
    if (labels != static_cast<std::uint64_t>(c.video.rows()) || c.audio.rows() != c.video.rows())
      throw FormatError("snippet counts disagree inside content " + std::to_string(c.id));
    c.labels.resize(labels);
    for (auto& label : c.labels) label = r.pod<std::int32_t>();
  }
  return Corpus(config, std::move(mix), std::move(contents));
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open<std::ofstream>(path);
  write_corpus(out, corpus);
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open<std::ifstream>(path);
  return read_corpus(in);
}

void write_params(std::ostream& out, const TowerParams& params) {
  Writer w(out);
  w.magic(kCheckpointMagic);
  w.pod(kVersion);
  const auto& d = params.dims();
  for (std::size_t v : {d.video_in, d.audio_in, d.hidden, d.video_out, d.audio_out, d.embed}) w.u64(v);
  w.u64(params.seed());
  w.u64(params.size());
  out.write(reinterpret_cast<const char*>(params.values().data()),
            static_cast<std::streamsize>(sizeof(double) * params.size()));
  w.finish();
}

TowerParams read_params(std::istream& in) {
  Reader r(in);
  r.magic(kCheckpointMagic, "checkpoint");
  EncoderDims d;
  d.video_in = r.u64();
  d.audio_in = r.u64();
  d.hidden = r.u64();
  d.video_out = r.u64();
  d.audio_out = r.u64();
  d.embed = r.u64();
  const auto seed = r.u64();
  const auto n = r.u64();
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint dims are invalid: ") + e.what());
  }
  if (n > kMaxElements || n != TowerParams::count(d)) throw FormatError("checkpoint size does not match its dims");
  TowerParams params(d, seed);
  in.read(reinterpret_cast<char*>(params.values().data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw FormatError("unexpected end of file");
  return params;
}

void save_params(const std::filesystem::path& path, const TowerParams& params) {
  auto out = open<std::ofstream>(path);
  write_params(out, params);
}

TowerParams load_params(const std::filesystem::path& path) {
  auto in = open<std::ifstream>(path);
  return read_params(in);
}

}  // namespace avlab
