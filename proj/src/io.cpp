#include "bird/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace bird {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<uint32_t>(f));
}

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t n) : data_(data), n_(n) {}
  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(data_[pos_]) |
                 static_cast<uint32_t>(data_[pos_ + 1]) << 8 |
                 static_cast<uint32_t>(data_[pos_ + 2]) << 16 |
                 static_cast<uint32_t>(data_[pos_ + 3]) << 24;
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), len);
    pos_ += len;
    return s;
  }
  const uint8_t* raw(size_t len) {
    need(len);
    const uint8_t* p = data_ + pos_;
    pos_ += len;
    return p;
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return n_ - pos_; }

 private:
  void need(size_t len) const {
    if (pos_ + len > n_) throw std::runtime_error("truncated file");
  }
  const uint8_t* data_;
  size_t n_;
  size_t pos_ = 0;
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t n, uint32_t crc) {
  static uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  crc ^= 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i)
    crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

uint32_t crc32_of_floats(const std::vector<float>& v, uint32_t crc) {
  std::vector<uint8_t> bytes;
  bytes.reserve(v.size() * 4);
  for (float f : v) put_f32(bytes, f);
  return crc32(bytes.data(), bytes.size(), crc);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

namespace {
void rename_into_place(const std::string& tmp, const std::string& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot write " + path + ": " + ec.message());
  }
}
}  // namespace

void write_text_file_atomic(const std::string& path,
                            const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

void write_binary_file_atomic(const std::string& path,
                              const std::vector<uint8_t>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path);
}

// ---------------------------------------------------------------- images

namespace {
int next_pnm_int(ByteReader& r) {
  // Skips whitespace and '#' comments.
  int c;
  for (;;) {
    c = r.remaining() ? *r.raw(1) : -1;
    if (c == '#') {
      while (r.remaining() && *r.raw(1) != '\n') {
      }
    } else if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
      break;
    }
  }
  if (c < '0' || c > '9') throw std::runtime_error("malformed PNM header");
  int v = c - '0';
  while (r.remaining()) {
    c = *r.raw(1);
    if (c < '0' || c > '9') break;
    v = v * 10 + (c - '0');
  }
  return v;
}
}  // namespace

Image read_image(const std::string& path) {
  const std::string content = read_text_file(path);
  ByteReader r(reinterpret_cast<const uint8_t*>(content.data()),
               content.size());
  const std::string magic = r.str(2);
  int channels;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    throw std::runtime_error(path + ": unsupported magic '" + magic + "'");
  const int w = next_pnm_int(r);
  const int h = next_pnm_int(r);
  const int maxval = next_pnm_int(r);
  if (maxval != 255)
    throw std::runtime_error(path + ": only maxval 255 supported");
  if (w <= 0 || h <= 0) throw std::runtime_error(path + ": bad dimensions");
  const size_t payload = static_cast<size_t>(w) * h * channels;
  const uint8_t* bytes = r.raw(payload);
  Image img(channels, h, w);
  // PNM interleaves channels; Image is planar.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) =
            static_cast<float>(bytes[(static_cast<size_t>(y) * w + x) * channels + c]) /
            255.0f;
  return img;
}

void write_image(const std::string& path, const Image& img) {
  check(img.channels == 1 || img.channels == 3,
        "write_image: only 1 or 3 channels");
  std::string header = img.channels == 1 ? "P5" : "P6";
  header += "\n" + std::to_string(img.width) + " " +
            std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<size_t>(img.numel()));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float p = img.at(c, y, x);
        const float clamped = p < 0.0f ? 0.0f : (p > 1.0f ? 1.0f : p);
        out.push_back(static_cast<uint8_t>(std::lround(clamped * 255.0f)));
      }
  write_binary_file_atomic(path, out);
}

// ---------------------------------------------------------------- tensors

void write_tensor_ft(const std::string& path, const Tensor& t) {
  std::vector<uint8_t> out = {'B', 'F', 'T', '1'};
  put_u32(out, static_cast<uint32_t>(t.rank()));
  for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (float f : t.data) put_f32(out, f);
  write_binary_file_atomic(path, out);
}

Tensor read_tensor_ft(const std::string& path) {
  const std::string content = read_text_file(path);
  ByteReader r(reinterpret_cast<const uint8_t*>(content.data()),
               content.size());
  if (r.str(4) != "BFT1") throw std::runtime_error(path + ": bad magic");
  const uint32_t rank = r.u32();
  if (rank > 8) throw std::runtime_error(path + ": absurd rank");
  std::vector<int> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(r.u32());
  Tensor t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = r.f32();
  return t;
}

// ------------------------------------------------------------- checkpoint

namespace {
constexpr uint32_t kCheckpointVersion = 1;

void put_entry(std::vector<uint8_t>& out, std::vector<uint8_t>& payload,
               const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, static_cast<uint32_t>(t.rank()));
  for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (float f : t.data) {
    put_f32(out, f);
    put_f32(payload, f);
  }
}
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  check(ckpt.opt.m.size() == 8 && ckpt.opt.v.size() == 8,
        "save_checkpoint: optimizer state must cover all 8 param tensors");
  std::vector<std::pair<std::string, Tensor>> entries;
  entries.emplace_back("meta.iteration",
                       Tensor::scalar(static_cast<float>(ckpt.iteration)));
  entries.emplace_back("meta.hidden_width",
                       Tensor::scalar(static_cast<float>(ckpt.params.cfg.hidden_width)));
  entries.emplace_back("meta.scale",
                       Tensor::scalar(static_cast<float>(ckpt.params.cfg.scale)));
  for (const auto& [name, t] : ckpt.params.named())
    entries.emplace_back("param." + name, *t);
  entries.emplace_back("opt.step",
                       Tensor::scalar(static_cast<float>(ckpt.opt.step)));
  {
    auto named = ckpt.params.named();
    for (size_t i = 0; i < named.size(); ++i) {
      entries.emplace_back("opt.m." + named[i].first, ckpt.opt.m[i]);
      entries.emplace_back("opt.v." + named[i].first, ckpt.opt.v[i]);
    }
  }
  entries.emplace_back("feat.w1", ckpt.feats.w1);
  entries.emplace_back("feat.b1", ckpt.feats.b1);
  entries.emplace_back("feat.w2", ckpt.feats.w2);
  entries.emplace_back("feat.b2", ckpt.feats.b2);

  std::vector<uint8_t> out = {'B', 'I', 'R', 'D'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(entries.size()));
  std::vector<uint8_t> payload;
  for (const auto& [name, t] : entries) put_entry(out, payload, name, t);
  put_u32(out, crc32(payload.data(), payload.size()));
  write_binary_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string content = read_text_file(path);
  ByteReader r(reinterpret_cast<const uint8_t*>(content.data()),
               content.size());
  if (r.str(4) != "BIRD") throw std::runtime_error(path + ": bad magic");
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  const uint32_t n_entries = r.u32();
  std::map<std::string, Tensor> entries;
  std::vector<uint8_t> payload;
  for (uint32_t e = 0; e < n_entries; ++e) {
    const uint32_t name_len = r.u32();
    if (name_len > 256) throw std::runtime_error(path + ": absurd name");
    const std::string name = r.str(name_len);
    const uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error(path + ": absurd rank");
    std::vector<int> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(r.u32());
    Tensor t(shape.empty() ? std::vector<int>{1} : shape);
    for (int64_t i = 0; i < t.numel(); ++i) {
      const float f = r.f32();
      t[i] = f;
      put_f32(payload, f);
    }
    entries.emplace(name, std::move(t));
  }
  const uint32_t stored_crc = r.u32();
  const uint32_t computed = crc32(payload.data(), payload.size());
  if (stored_crc != computed)
    throw std::runtime_error(path + ": CRC mismatch (corrupt checkpoint)");

  auto take = [&](const std::string& name) -> Tensor {
    auto it = entries.find(name);
    if (it == entries.end())
      throw std::runtime_error(path + ": missing entry " + name);
    return it->second;
  };

  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.iteration = static_cast<int64_t>(take("meta.iteration").item());
  ckpt.params.cfg.hidden_width =
      static_cast<int>(take("meta.hidden_width").item());
  ckpt.params.cfg.scale = static_cast<int>(take("meta.scale").item());
  for (auto& [name, t] : ckpt.params.named()) *t = take("param." + name);
  ckpt.opt.step = static_cast<int64_t>(take("opt.step").item());
  for (auto& [name, t] : ckpt.params.named()) {
    (void)t;
    ckpt.opt.m.push_back(take("opt.m." + name));
    ckpt.opt.v.push_back(take("opt.v." + name));
  }
  ckpt.feats.w1 = take("feat.w1");
  ckpt.feats.b1 = take("feat.b1");
  ckpt.feats.w2 = take("feat.w2");
  ckpt.feats.b2 = take("feat.b2");
  return ckpt;
}

}  // namespace bird
