#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "exact/voxel/image.hpp"

namespace exact {

// EXNV v1 layout, all integers and reals little-endian:
//   0..3  magic "EXNV"
//   4     version (1)
//   5     dtype (1 = f32 intensity, 2 = u8 label)
//   6..7  reserved, zero
//   8     3 x u32 dims (z, y, x)
//   20    3 x f64 spacing (mm)
//   44    3 x f64 origin (mm)
//   68    voxel payload, z outermost, x innermost
inline constexpr std::array<char, 4> kExnvMagic = {'E', 'X', 'N', 'V'};
inline constexpr std::uint8_t kExnvVersion = 1;
inline constexpr std::size_t kExnvHeaderSize = 68;

enum class DType : std::uint8_t { f32_intensity = 1, u8_label = 2 };

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

template <class T>
std::vector<std::uint8_t> encode(const Image<T>& img, DType dtype) {
  std::vector<std::uint8_t> out;
  out.reserve(kExnvHeaderSize + img.size() * sizeof(T));
  out.insert(out.end(), kExnvMagic.begin(), kExnvMagic.end());
  out.push_back(kExnvVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(0);
  out.push_back(0);
  for (int d : img.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double s : img.spacing()) put_u64(out, std::bit_cast<std::uint64_t>(s));
  for (double o : img.origin()) put_u64(out, std::bit_cast<std::uint64_t>(o));
  for (T v : img.voxels()) {
    if constexpr (std::is_same_v<T, float>) {
      put_u32(out, std::bit_cast<std::uint32_t>(v));
    } else {
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_volume(const AnyVolume& vol) {
  return std::visit(
      [](const auto& img) {
        using T = typename std::decay_t<decltype(img)>::value_type;
        return detail::encode(img, std::is_same_v<T, float> ? DType::f32_intensity : DType::u8_label);
      },
      vol);
}

inline AnyVolume decode_volume(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= kExnvHeaderSize, Errc::malformed_header, "file shorter than EXNV header");
  require(std::memcmp(bytes.data(), kExnvMagic.data(), 4) == 0, Errc::malformed_header, "bad magic bytes");
  require(bytes[4] == kExnvVersion, Errc::malformed_header, "unsupported version " + std::to_string(bytes[4]));
  require(bytes[6] == 0 && bytes[7] == 0, Errc::malformed_header, "reserved bytes must be zero");
  const std::uint8_t dtype = bytes[5];
  require(dtype == 1 || dtype == 2, Errc::unknown_dtype, "dtype code " + std::to_string(dtype));

  Geometry g;
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t d = detail::get_u32(&bytes[8 + 4 * a]);
    require(d >= 1 && d <= 0x7fffffffu, Errc::malformed_header, "dims must be >= 1");
    g.dims[a] = static_cast<int>(d);
    g.spacing[a] = std::bit_cast<double>(detail::get_u64(&bytes[20 + 8 * a]));
    g.origin[a] = std::bit_cast<double>(detail::get_u64(&bytes[44 + 8 * a]));
    require(g.spacing[a] > 0.0 && std::isfinite(g.spacing[a]), Errc::malformed_header,
            "spacing must be finite and > 0");
  }
  const std::size_t elem = dtype == 1 ? 4 : 1;
  const auto count = static_cast<std::uint64_t>(product(g.dims));
  const std::uint64_t payload = bytes.size() - kExnvHeaderSize;
  require(payload == count * elem, Errc::truncated_payload,
          "payload has " + std::to_string(payload) + " bytes, header implies " + std::to_string(count * elem));

  const std::uint8_t* p = bytes.data() + kExnvHeaderSize;
  if (dtype == 1) {
    std::vector<float> vox(count);
    for (std::uint64_t i = 0; i < count; ++i) vox[i] = std::bit_cast<float>(detail::get_u32(p + 4 * i));
    return Volume(g, std::move(vox));
  }
  return Image<std::uint8_t>(g, std::vector<std::uint8_t>(p, p + count));
}

inline void write_volume(const AnyVolume& vol, const std::filesystem::path& path) {
  const auto bytes = encode_volume(vol);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Errc::io, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), Errc::io, "write failed for " + path.string());
}

inline AnyVolume read_volume(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_volume(bytes);
}

inline Volume read_intensity_volume(const std::filesystem::path& path) {
  auto v = read_volume(path);
  require(std::holds_alternative<Volume>(v), Errc::invalid_argument, path.string() + " holds labels, not intensities");
  return std::get<Volume>(std::move(v));
}

inline Image<std::uint8_t> read_label_volume(const std::filesystem::path& path) {
  auto v = read_volume(path);
  require(std::holds_alternative<Image<std::uint8_t>>(v), Errc::invalid_argument,
          path.string() + " holds intensities, not labels");
  return std::get<Image<std::uint8_t>>(std::move(v));
}

}  // namespace exact
