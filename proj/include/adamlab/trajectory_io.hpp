#pragma once

// Trajectory persistence.
//
// ATRJ binary, version 1. All integers and floats little-endian, floats are
// IEEE-754 binary64:
//
//   offset  type        field
//   0       char[4]     magic "ATRJ"
//   4       u16         version (= 1)
//           u32 u32 u32 input_dim, hidden_width, output_dim
//           u8          activation (0 tanh, 1 sigmoid, 2 relu)
//           u64 x3      dataset_index, n_points, init_seed
//           f64 x4      alpha, beta1, beta2, epsilon
//           u8 u8 u8    precision kind (0 native64, 1 native32, 2 emulated),
//                       exponent_bits, mantissa_bits
//           u64 u64     epochs, snapshot_stride
//           u8 u64      diverged flag, diverged_at (0 when flag is 0)
//           u64         loss count L, then f64[L]
//           u64 u64     snapshot count S, parameter count P
//           S x (u64 epoch, f64[P])
//
// CSV: header `epoch,loss,p0,...,p{P-1}`, one row per recorded epoch,
// parameter cells filled on snapshot rows and empty otherwise. Floats use the
// shortest decimal form that parses back to the identical double.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "adamlab/errors.hpp"
#include "adamlab/trainer.hpp"

namespace adamlab {

inline constexpr std::array<char, 4> trajectory_magic{'A', 'T', 'R', 'J'};
inline constexpr std::uint16_t trajectory_version = 1;

namespace detail {

class ByteWriter {
   public:
    template <class T>
    void put(T value) {
        static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
        if constexpr (std::is_floating_point_v<T>) {
            put(std::bit_cast<std::uint64_t>(static_cast<double>(value)));
        } else {
            using U = std::make_unsigned_t<T>;
            U u = static_cast<U>(value);
            for (std::size_t i = 0; i < sizeof(U); ++i) {
                bytes_.push_back(static_cast<char>(u & 0xFF));
                if constexpr (sizeof(U) > 1) u >>= 8;
            }
        }
    }
    void put_raw(std::string_view raw) { bytes_.append(raw); }
    std::string take() { return std::move(bytes_); }

   private:
    std::string bytes_;
};

class ByteReader {
   public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        if constexpr (std::is_same_v<T, double>) {
            return std::bit_cast<double>(get<std::uint64_t>());
        } else {
            need(sizeof(T));
            std::make_unsigned_t<T> u = 0;
            for (std::size_t i = 0; i < sizeof(T); ++i)
                u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
            pos_ += sizeof(T);
            return static_cast<T>(u);
        }
    }
    std::string_view raw(std::size_t n) {
        need(n);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

   private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("trajectory file is truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

inline std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw FormatError("malformed number '" + std::string(text) + "' in trajectory CSV");
    return value;
}

inline std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw FormatError("malformed integer '" + std::string(text) + "' in trajectory CSV");
    return value;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary

inline std::string encode_trajectory(const Trajectory& traj) {
    const RunConfig& c = traj.config;
    detail::ByteWriter w;
    w.put_raw(std::string_view(trajectory_magic.data(), trajectory_magic.size()));
    w.put(trajectory_version);
    w.put(static_cast<std::uint32_t>(c.shape.input_dim));
    w.put(static_cast<std::uint32_t>(c.shape.hidden_width));
    w.put(static_cast<std::uint32_t>(c.shape.output_dim));
    w.put(static_cast<std::uint8_t>(c.shape.activation));
    w.put(c.dataset_index);
    w.put(c.n_points);
    w.put(c.init_seed);
    w.put(c.adam.alpha);
    w.put(c.adam.beta1);
    w.put(c.adam.beta2);
    w.put(c.adam.epsilon);
    w.put(static_cast<std::uint8_t>(c.precision.kind));
    w.put(static_cast<std::uint8_t>(c.precision.exponent_bits));
    w.put(static_cast<std::uint8_t>(c.precision.mantissa_bits));
    w.put(c.epochs);
    w.put(c.snapshot_stride);
    w.put(static_cast<std::uint8_t>(traj.diverged_at ? 1 : 0));
    w.put(traj.diverged_at.value_or(0));
    w.put(static_cast<std::uint64_t>(traj.loss.size()));
    for (double l : traj.loss) w.put(l);
    const std::uint64_t n_params = traj.snapshots.empty() ? c.shape.parameter_count() : traj.snapshots.front().params.size();
    w.put(static_cast<std::uint64_t>(traj.snapshots.size()));
    w.put(n_params);
    for (const auto& s : traj.snapshots) {
        if (s.params.size() != n_params) throw InvalidArgument("snapshots have inconsistent parameter counts");
        w.put(s.epoch);
        for (double p : s.params) w.put(p);
    }
    return w.take();
}

inline Trajectory decode_trajectory(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < 4 || r.raw(4) != std::string_view(trajectory_magic.data(), 4))
        throw FormatError("missing ATRJ magic");
    const auto version = r.get<std::uint16_t>();
    if (version != trajectory_version)
        throw UnsupportedVersion("unsupported ATRJ version " + std::to_string(version));

    Trajectory traj;
    RunConfig& c = traj.config;
    c.shape.input_dim = static_cast<int>(r.get<std::uint32_t>());
    c.shape.hidden_width = static_cast<int>(r.get<std::uint32_t>());
    c.shape.output_dim = static_cast<int>(r.get<std::uint32_t>());
    const auto act = r.get<std::uint8_t>();
    if (act > 2) throw FormatError("bad activation code");
    c.shape.activation = static_cast<Activation>(act);
    c.dataset_index = r.get<std::uint64_t>();
    c.n_points = r.get<std::uint64_t>();
    c.init_seed = r.get<std::uint64_t>();
    c.adam.alpha = r.get<double>();
    c.adam.beta1 = r.get<double>();
    c.adam.beta2 = r.get<double>();
    c.adam.epsilon = r.get<double>();
    const auto kind = r.get<std::uint8_t>();
    if (kind > 2) throw FormatError("bad precision code");
    c.precision.kind = static_cast<PrecisionMode::Kind>(kind);
    c.precision.exponent_bits = r.get<std::uint8_t>();
    c.precision.mantissa_bits = r.get<std::uint8_t>();
    c.epochs = r.get<std::uint64_t>();
    c.snapshot_stride = r.get<std::uint64_t>();
    const auto diverged = r.get<std::uint8_t>();
    const auto diverged_at = r.get<std::uint64_t>();
    if (diverged > 1) throw FormatError("bad divergence flag");
    if (diverged) traj.diverged_at = diverged_at;

    const auto n_loss = r.get<std::uint64_t>();
    if (n_loss > r.remaining() / 8) throw FormatError("trajectory file is truncated");
    traj.loss.resize(n_loss);
    for (double& l : traj.loss) l = r.get<double>();

    const auto n_snap = r.get<std::uint64_t>();
    const auto n_params = r.get<std::uint64_t>();
    if (n_params > r.remaining() / 8 || (n_snap > 0 && n_snap > r.remaining() / (8 * (n_params + 1))))
        throw FormatError("trajectory file is truncated");
    traj.snapshots.resize(n_snap);
    for (auto& s : traj.snapshots) {
        s.epoch = r.get<std::uint64_t>();
        s.params.resize(n_params);
        for (double& p : s.params) p = r.get<double>();
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after trajectory");
    return traj;
}

inline void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    detail::write_file(path, encode_trajectory(traj));
}

inline Trajectory read_trajectory_binary(const std::filesystem::path& path) {
    return decode_trajectory(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string encode_trajectory_csv(const Trajectory& traj) {
    const std::size_t n_params =
        traj.snapshots.empty() ? traj.config.shape.parameter_count() : traj.snapshots.front().params.size();
    std::string out = "epoch,loss";
    for (std::size_t k = 0; k < n_params; ++k) out += ",p" + std::to_string(k);
    out += '\n';
    std::size_t next_snap = 0;
    for (std::size_t e = 0; e < traj.loss.size(); ++e) {
        out += std::to_string(e);
        out += ',';
        out += detail::format_double(traj.loss[e]);
        if (next_snap < traj.snapshots.size() && traj.snapshots[next_snap].epoch == e) {
            for (double p : traj.snapshots[next_snap].params) {
                out += ',';
                out += detail::format_double(p);
            }
            ++next_snap;
        } else {
            out.append(n_params, ',');
        }
        out += '\n';
    }
    return out;
}

/// Parse the CSV form. The CSV carries no provenance, so `config` (when given)
/// is attached as is; otherwise epochs and stride are inferred from the rows.
inline Trajectory decode_trajectory_csv(std::string_view text, std::optional<RunConfig> config = std::nullopt) {
    auto split = [](std::string_view line) {
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return cells;
    };

    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < text.size();) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        pos = nl + 1;
    }
    if (lines.empty()) throw FormatError("empty trajectory CSV");
    const auto header = split(lines[0]);
    if (header.size() < 2 || header[0] != "epoch" || header[1] != "loss")
        throw FormatError("trajectory CSV header must start with epoch,loss");
    const std::size_t n_params = header.size() - 2;

    Trajectory traj;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i]);
        if (cells.size() != header.size()) throw FormatError("trajectory CSV row has wrong cell count");
        const auto epoch = detail::parse_u64(cells[0]);
        if (epoch != traj.loss.size()) throw FormatError("trajectory CSV epochs must be consecutive from 0");
        traj.loss.push_back(detail::parse_double(cells[1]));
        if (n_params > 0 && !cells[2].empty()) {
            Snapshot s{epoch, {}};
            s.params.reserve(n_params);
            for (std::size_t k = 0; k < n_params; ++k) s.params.push_back(detail::parse_double(cells[2 + k]));
            traj.snapshots.push_back(std::move(s));
        }
    }
    for (std::size_t e = 0; e < traj.loss.size(); ++e) {
        if (!std::isfinite(traj.loss[e])) {
            traj.diverged_at = e;
            break;
        }
    }
    if (config) {
        traj.config = *config;
    } else {
        traj.config.epochs = traj.loss.size();
        if (traj.snapshots.size() >= 2) traj.config.snapshot_stride = traj.snapshots[1].epoch - traj.snapshots[0].epoch;
    }
    return traj;
}

inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    detail::write_file(path, encode_trajectory_csv(traj));
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path, std::optional<RunConfig> config = std::nullopt) {
    return decode_trajectory_csv(detail::read_file(path), std::move(config));
}

/// Read either format, chosen by the leading bytes.
inline Trajectory read_trajectory(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    if (bytes.starts_with("epoch,")) return decode_trajectory_csv(bytes);
    return decode_trajectory(bytes);
}

}  // namespace adamlab
