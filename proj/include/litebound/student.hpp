// Copyright 2026 The litebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LITEBOUND_STUDENT_HPP
#define LITEBOUND_STUDENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "litebound/error.hpp"
#include "litebound/nn.hpp"
#include "litebound/resample.hpp"
#include "litebound/tensor.hpp"

namespace litebound {

/// Channel widths of the student. The encoder pyramid has widths
/// {w, 2w, 4w, 8w}; the full-scale network uses w = 64, latent width 512.
struct StudentConfig {
  int base_width = 64;
  int latent_width = 512;
  std::uint64_t seed = 0;

  static StudentConfig full() { return {64, 512, 0}; }
  static StudentConfig desk() { return {8, 64, 0}; }

  std::array<int, 4> widths() const { return {base_width, 2 * base_width, 4 * base_width, 8 * base_width}; }
  bool operator==(const StudentConfig&) const = default;
};

inline constexpr int kStudentStride = 16;

template <typename T>
struct EncoderPyramid {
  Tensor<T> f1, f2, f3, f4;  // H/2, H/4, H/8, H/16
};

template <typename T>
struct LatentQuartet {
  std::array<Tensor<T>, 4> l;  // L1..L4

  Tensor<T>& operator[](std::size_t i) { return l[i]; }
  const Tensor<T>& operator[](std::size_t i) const { return l[i]; }
};

template <typename T>
struct Prediction {
  Tensor<T> logits;       // 1 x H x W
  Tensor<T> probability;  // sigmoid(logits)
};

template <typename T>
struct StudentOutput {
  Prediction<T> prediction;
  LatentQuartet<T> latents;
};

enum class ParamGroup { encoder, heads, decoder };

/// Plug-in point for encoder/decoder pairs that expose the latent quartet.
///
/// forward() records activations for the following backward(); infer() is
/// const and keeps no state, so concurrent inference is safe.
template <typename T>
class Backbone {
public:
  virtual ~Backbone() = default;
  virtual StudentOutput<T> forward(const Tensor<T>& image) = 0;
  virtual StudentOutput<T> infer(const Tensor<T>& image) const = 0;
  /// Accumulates parameter gradients from d(loss)/d(logits) and d(loss)/d(L1..L4).
  virtual void backward(const Tensor<T>& grad_logits, const LatentQuartet<T>& grad_latents) = 0;
  virtual std::vector<nn::Parameter<T>*> parameters(ParamGroup group) = 0;

  std::vector<nn::Parameter<T>*> all_parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto g : {ParamGroup::encoder, ParamGroup::heads, ParamGroup::decoder}) {
      auto p = parameters(g);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }
  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : all_parameters()) n += p->size();
    return n;
  }
  void zero_grad() {
    for (auto* p : all_parameters()) p->zero_grad();
  }
};

inline void require_stride(int h, int w) {
  if (h <= 0 || w <= 0 || h % kStudentStride != 0 || w % kStudentStride != 0)
    throw ShapeError("student input " + std::to_string(h) + "x" + std::to_string(w) +
                     " must have both sides divisible by 16");
}

/// U-Net student with a four-head latent bottleneck and latent-guided decoder.
///
/// Encoder: f_i = maxpool(doubleconv_i(f_{i-1})), f_0 = image.
/// Heads:   L1 = conv1x1(f4), L2 = conv3x3(L1), L3 = conv3x3(L2), L4 = conv3x3(L3).
/// Decoder: [f4;L1;L3] -> up -> [.;f3] -> dconv -> up -> [.;f2;up4(L2;L4)] -> dconv
///          -> up -> [.;f1] -> dconv -> up -> dconv -> conv1x1 -> sigmoid.
template <typename T>
class UNetStudent final : public Backbone<T> {
public:
  explicit UNetStudent(StudentConfig cfg = StudentConfig::desk()) : cfg_(cfg) {
    const auto w = cfg.widths();
    const int d = cfg.latent_width;
    if (cfg.base_width <= 0 || d <= 0) throw ConfigError("student widths must be positive");
    int in = 3;
    for (int i = 0; i < 4; ++i) {
      enc_[static_cast<std::size_t>(i)] = nn::DoubleConv<T>("enc" + std::to_string(i + 1), in, w[static_cast<std::size_t>(i)]);
      in = w[static_cast<std::size_t>(i)];
    }
    heads_[0] = nn::Conv2d<T>("head.l1", w[3], d, 1);
    for (int i = 1; i < 4; ++i) heads_[static_cast<std::size_t>(i)] = nn::Conv2d<T>("head.l" + std::to_string(i + 1), d, d, 3);
    dec3_ = nn::DoubleConv<T>("dec3", w[3] + 2 * d + w[2], w[2]);
    dec2_ = nn::DoubleConv<T>("dec2", w[2] + w[1] + 2 * d, w[1]);
    dec1_ = nn::DoubleConv<T>("dec1", w[1] + w[0], w[0]);
    dec0_ = nn::DoubleConv<T>("dec0", w[0], w[0]);
    out_ = nn::Conv2d<T>("out", w[0], 1, 1);
    std::mt19937_64 rng(cfg.seed);
    for (auto& e : enc_) e.init(rng);
    for (auto& h : heads_) h.init(rng);
    dec3_.init(rng);
    dec2_.init(rng);
    dec1_.init(rng);
    dec0_.init(rng);
    out_.init(rng);
    // Latent heads are linear maps; unit-gain (not He) initialisation keeps the chain's scale stable.
    for (auto& h : heads_)
      for (auto& v : h.weight().value) v = static_cast<T>(static_cast<double>(v) / std::sqrt(2.0));
  }

  const StudentConfig& config() const noexcept { return cfg_; }

  // -- individual stages ----------------------------------------------------

  EncoderPyramid<T> encode(const Tensor<T>& image) const { return encode_impl(image, nullptr); }

  LatentQuartet<T> latent_heads(const Tensor<T>& f4) const { return heads_impl(f4, nullptr); }

  Prediction<T> decode(const EncoderPyramid<T>& pyr, const LatentQuartet<T>& lat) const {
    return decode_impl(pyr, lat, nullptr);
  }

  // -- Backbone ---------------------------------------------------------------

  StudentOutput<T> infer(const Tensor<T>& image) const override {
    auto pyr = encode_impl(image, nullptr);
    auto lat = heads_impl(pyr.f4, nullptr);
    auto pred = decode_impl(pyr, lat, nullptr);
    return {std::move(pred), std::move(lat)};
  }

  StudentOutput<T> forward(const Tensor<T>& image) override {
    trace_ = std::make_unique<Trace>();
    auto pyr = encode_impl(image, trace_.get());
    auto lat = heads_impl(pyr.f4, trace_.get());
    auto pred = decode_impl(pyr, lat, trace_.get());
    return {std::move(pred), std::move(lat)};
  }

  void backward(const Tensor<T>& grad_logits, const LatentQuartet<T>& grad_latents) override {
    if (!trace_) throw Error("UNetStudent::backward without a preceding forward");
    Trace& t = *trace_;
    const auto w = cfg_.widths();
    const int d = cfg_.latent_width;

    // decoder
    Tensor<T> g = out_.backward(grad_logits, t.out, true);
    g = dec0_.backward(std::move(g), t.dec0, true);
    g = t.up0->backward(g);
    Tensor<T> gx1 = dec1_.backward(std::move(g), t.dec1, true);
    Tensor<T> gf1 = slice_channels(gx1, w[1], w[0]);
    g = t.up1->backward(slice_channels(gx1, 0, w[1]));
    Tensor<T> gx2 = dec2_.backward(std::move(g), t.dec2, true);
    Tensor<T> gf2 = slice_channels(gx2, w[2], w[1]);
    Tensor<T> g24 = t.up_guide->backward(slice_channels(gx2, w[2] + w[1], 2 * d));
    g = t.up2->backward(slice_channels(gx2, 0, w[2]));
    Tensor<T> gx3 = dec3_.backward(std::move(g), t.dec3, true);
    Tensor<T> gf3 = slice_channels(gx3, w[3] + 2 * d, w[2]);
    Tensor<T> gd4 = t.up3->backward(slice_channels(gx3, 0, w[3] + 2 * d));
    Tensor<T> gf4 = slice_channels(gd4, 0, w[3]);

    // latent chain, last head first
    std::array<Tensor<T>, 4> gl;
    gl[0] = slice_channels(gd4, w[3], d);
    gl[2] = slice_channels(gd4, w[3] + d, d);
    gl[1] = slice_channels(g24, 0, d);
    gl[3] = slice_channels(g24, d, d);
    for (std::size_t i = 0; i < 4; ++i)
      if (!grad_latents[i].empty()) gl[i] += grad_latents[i];
    gl[2] += heads_[3].backward(gl[3], t.heads[3], true);
    gl[1] += heads_[2].backward(gl[2], t.heads[2], true);
    gl[0] += heads_[1].backward(gl[1], t.heads[1], true);
    gf4 += heads_[0].backward(gl[0], t.heads[0], true);

    // encoder
    std::array<Tensor<T>*, 3> skip{&gf1, &gf2, &gf3};
    Tensor<T> gf = std::move(gf4);
    for (int i = 3; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      Tensor<T> ge = nn::maxpool2_backward(gf, t.pools[k]);
      Tensor<T> gin = enc_[k].backward(std::move(ge), t.enc[k], i > 0);
      if (i > 0) {
        gin += *skip[k - 1];
        gf = std::move(gin);
      }
    }
    trace_.reset();
  }

  std::vector<nn::Parameter<T>*> parameters(ParamGroup group) override {
    std::vector<nn::Parameter<T>*> out;
    auto add = [&out](auto&& params) { out.insert(out.end(), params.begin(), params.end()); };
    switch (group) {
      case ParamGroup::encoder:
        for (auto& e : enc_) add(e.parameters());
        break;
      case ParamGroup::heads:
        for (auto& h : heads_) add(h.parameters());
        break;
      case ParamGroup::decoder:
        add(dec3_.parameters());
        add(dec2_.parameters());
        add(dec1_.parameters());
        add(dec0_.parameters());
        add(out_.parameters());
        break;
    }
    return out;
  }

private:
  struct Trace {
    std::array<nn::DoubleConvCache<T>, 4> enc;
    std::array<nn::PoolCache, 4> pools;
    std::array<nn::ConvCache<T>, 4> heads;
    nn::DoubleConvCache<T> dec3, dec2, dec1, dec0;
    nn::ConvCache<T> out;
    std::unique_ptr<BilinearResize> up3, up2, up1, up0, up_guide;
  };

  EncoderPyramid<T> encode_impl(const Tensor<T>& image, Trace* t) const {
    if (image.channels() != 3) throw ShapeError("student expects a 3-channel image, got " + image.shape().str());
    require_stride(image.height(), image.width());
    EncoderPyramid<T> p;
    std::array<Tensor<T>*, 4> outs{&p.f1, &p.f2, &p.f3, &p.f4};
    const Tensor<T>* x = &image;
    for (std::size_t i = 0; i < 4; ++i) {
      Tensor<T> e = enc_[i].forward(*x, t ? &t->enc[i] : nullptr);
      *outs[i] = nn::maxpool2(e, t ? &t->pools[i] : nullptr);
      x = outs[i];
    }
    return p;
  }

  LatentQuartet<T> heads_impl(const Tensor<T>& f4, Trace* t) const {
    if (f4.channels() != cfg_.widths()[3]) throw ShapeError("latent_heads: f4 has wrong width " + f4.shape().str());
    LatentQuartet<T> q;
    q[0] = heads_[0].forward(f4, t ? &t->heads[0] : nullptr);
    for (std::size_t i = 1; i < 4; ++i) q[i] = heads_[i].forward(q[i - 1], t ? &t->heads[i] : nullptr);
    return q;
  }

  Prediction<T> decode_impl(const EncoderPyramid<T>& p, const LatentQuartet<T>& q, Trace* t) const {
    const auto w = cfg_.widths();
    const int h4 = p.f4.height(), w4 = p.f4.width();
    require_shape(p.f4, Shape{w[3], h4, w4}, "decode: f4");
    require_shape(p.f3, Shape{w[2], 2 * h4, 2 * w4}, "decode: f3");
    require_shape(p.f2, Shape{w[1], 4 * h4, 4 * w4}, "decode: f2");
    require_shape(p.f1, Shape{w[0], 8 * h4, 8 * w4}, "decode: f1");
    for (std::size_t i = 0; i < 4; ++i)
      require_shape(q[i], Shape{cfg_.latent_width, h4, w4}, "decode: latent");

    auto make = [](int ih, int iw, int oh, int ow) { return std::make_unique<BilinearResize>(ih, iw, oh, ow); };
    auto up3 = make(h4, w4, 2 * h4, 2 * w4);
    auto up2 = make(2 * h4, 2 * w4, 4 * h4, 4 * w4);
    auto up1 = make(4 * h4, 4 * w4, 8 * h4, 8 * w4);
    auto up0 = make(8 * h4, 8 * w4, 16 * h4, 16 * w4);
    auto up_guide = make(h4, w4, 4 * h4, 4 * w4);

    Tensor<T> d4 = concat_channels<T>({&p.f4, &q[0], &q[2]});
    Tensor<T> u = up3->forward(d4);
    Tensor<T> x3 = concat_channels<T>({&u, &p.f3});
    Tensor<T> y3 = dec3_.forward(x3, t ? &t->dec3 : nullptr);

    Tensor<T> l24 = concat_channels<T>({&q[1], &q[3]});
    Tensor<T> guide = up_guide->forward(l24);
    u = up2->forward(y3);
    Tensor<T> x2 = concat_channels<T>({&u, &p.f2, &guide});
    Tensor<T> y2 = dec2_.forward(x2, t ? &t->dec2 : nullptr);

    u = up1->forward(y2);
    Tensor<T> x1 = concat_channels<T>({&u, &p.f1});
    Tensor<T> y1 = dec1_.forward(x1, t ? &t->dec1 : nullptr);

    u = up0->forward(y1);
    Tensor<T> y0 = dec0_.forward(u, t ? &t->dec0 : nullptr);

    Prediction<T> pred;
    pred.logits = out_.forward(y0, t ? &t->out : nullptr);
    pred.probability = Tensor<T>(pred.logits.shape());
    for (std::size_t i = 0; i < pred.logits.size(); ++i) pred.probability[i] = nn::sigmoid(pred.logits[i]);
    if (t) {
      t->up3 = std::move(up3);
      t->up2 = std::move(up2);
      t->up1 = std::move(up1);
      t->up0 = std::move(up0);
      t->up_guide = std::move(up_guide);
    }
    return pred;
  }

  StudentConfig cfg_;
  std::array<nn::DoubleConv<T>, 4> enc_;
  std::array<nn::Conv2d<T>, 4> heads_;
  nn::DoubleConv<T> dec3_, dec2_, dec1_, dec0_;
  nn::Conv2d<T> out_;
  std::unique_ptr<Trace> trace_;
};

// ---------------------------------------------------------------------------
// Checkpoints: magic "LBCK", u32 version, u32 fingerprint length + bytes,
// u32 parameter count, then per parameter: u32 name length + name, u64 size,
// float64 values. Little-endian host layout.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string checkpoint_name(int phase, int epoch) {
  return "phase" + std::to_string(phase) + "_epoch" + std::to_string(epoch) + ".ckpt";
}

namespace detail {
template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated checkpoint " + path.string());
  return v;
}
}  // namespace detail

template <typename T>
void save_checkpoint(const std::filesystem::path& path, Backbone<T>& model, const std::string& fingerprint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  os.write("LBCK", 4);
  detail::put<std::uint32_t>(os, kCheckpointVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(fingerprint.size()));
  os.write(fingerprint.data(), static_cast<std::streamsize>(fingerprint.size()));
  const auto params = model.all_parameters();
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::put<std::uint64_t>(os, p->size());
    for (T v : p->value) detail::put<double>(os, static_cast<double>(v));
  }
  if (!os) throw Error("short write on checkpoint " + path.string());
}

/// Restores parameters; returns the stored configuration fingerprint.
template <typename T>
std::string load_checkpoint(const std::filesystem::path& path, Backbone<T>& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PrerequisiteError("checkpoint not found: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "LBCK") throw FormatError("bad checkpoint magic in " + path.string());
  if (detail::get<std::uint32_t>(is, path) != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version in " + path.string());
  std::string fp(detail::get<std::uint32_t>(is, path), '\0');
  is.read(fp.data(), static_cast<std::streamsize>(fp.size()));
  const auto params = model.all_parameters();
  if (detail::get<std::uint32_t>(is, path) != params.size())
    throw FormatError("checkpoint parameter count does not match model: " + path.string());
  for (auto* p : params) {
    std::string name(detail::get<std::uint32_t>(is, path), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto size = detail::get<std::uint64_t>(is, path);
    if (name != p->name || size != p->size())
      throw FormatError("checkpoint parameter '" + name + "' does not match model parameter '" + p->name + "'");
    for (auto& v : p->value) v = static_cast<T>(detail::get<double>(is, path));
  }
  return fp;
}

}  // namespace litebound

#endif  // LITEBOUND_STUDENT_HPP
