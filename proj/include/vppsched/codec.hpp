#ifndef VPPSCHED_CODEC_HPP
#define VPPSCHED_CODEC_HPP

// Wire format of negotiation messages.
//
// All integers are little-endian, doubles are IEEE-754 binary64 stored as
// their little-endian bit pattern.
//
//   u32 body_length
//   u32 sender
//   vec target                      vec := u32 n, n * f64
//   u32 n_config, n_config * { u32 agent, u64 counter, vec power }
//   u32 best_creator
//   u32 n_best,   n_best   * { u32 agent, vec power }

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cohda.hpp"
#include "errors.hpp"

namespace vppsched {

/// Malformed wire data.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

    class Writer {
    public:
        void u32(std::uint32_t v)
        {
            for (int b = 0; b < 4; ++b)
                bytes.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }

        void u64(std::uint64_t v)
        {
            for (int b = 0; b < 8; ++b)
                bytes.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }

        void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

        void vec(const std::vector<double>& v)
        {
            u32(static_cast<std::uint32_t>(v.size()));
            for (double x : v)
                f64(x);
        }

        std::vector<std::uint8_t> bytes;
    };

    class Reader {
    public:
        explicit Reader(std::span<const std::uint8_t> data)
            : data_(data)
        {
        }

        std::uint32_t u32()
        {
            need(4);
            std::uint32_t v = 0;
            for (int b = 0; b < 4; ++b)
                v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * b);
            return v;
        }

        std::uint64_t u64()
        {
            need(8);
            std::uint64_t v = 0;
            for (int b = 0; b < 8; ++b)
                v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * b);
            return v;
        }

        double f64() { return std::bit_cast<double>(u64()); }

        std::vector<double> vec()
        {
            const std::uint32_t n = u32();
            need(std::size_t(n) * 8);
            std::vector<double> v(n);
            for (auto& x : v)
                x = f64();
            return v;
        }

        [[nodiscard]] bool at_end() const { return pos_ == data_.size(); }

    private:
        void need(std::size_t n) const
        {
            if (data_.size() - pos_ < n)
                throw DecodeError("message truncated");
        }

        std::span<const std::uint8_t> data_;
        std::size_t pos_ = 0;
    };

} // namespace detail

inline std::vector<std::uint8_t> encode(const NegotiationMessage& m)
{
    detail::Writer body;
    body.u32(m.sender);
    body.vec(m.target);
    body.u32(static_cast<std::uint32_t>(m.system_config.size()));
    for (const auto& [agent, entry] : m.system_config) {
        body.u32(agent);
        body.u64(entry.counter);
        body.vec(entry.power_kw);
    }
    body.u32(m.best_creator);
    body.u32(static_cast<std::uint32_t>(m.best_schedules.size()));
    for (const auto& [agent, power] : m.best_schedules) {
        body.u32(agent);
        body.vec(power);
    }
    detail::Writer out;
    out.u32(static_cast<std::uint32_t>(body.bytes.size()));
    out.bytes.insert(out.bytes.end(), body.bytes.begin(), body.bytes.end());
    return out.bytes;
}

inline NegotiationMessage decode(std::span<const std::uint8_t> data)
{
    detail::Reader head(data);
    const std::uint32_t length = head.u32();
    if (data.size() != std::size_t(length) + 4)
        throw DecodeError("length prefix does not match message size");
    detail::Reader r(data.subspan(4));
    NegotiationMessage m;
    m.sender = r.u32();
    m.target = r.vec();
    const std::uint32_t n_config = r.u32();
    for (std::uint32_t k = 0; k < n_config; ++k) {
        const AgentId agent = r.u32();
        ConfigEntry entry;
        entry.counter = r.u64();
        entry.power_kw = r.vec();
        m.system_config[agent] = std::move(entry);
    }
    m.best_creator = r.u32();
    const std::uint32_t n_best = r.u32();
    for (std::uint32_t k = 0; k < n_best; ++k) {
        const AgentId agent = r.u32();
        m.best_schedules[agent] = r.vec();
    }
    if (!r.at_end())
        throw DecodeError("trailing bytes after message");
    return m;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view text)
{
    return fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace vppsched

#endif
