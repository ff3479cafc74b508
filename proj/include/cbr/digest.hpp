#pragma once
#include <cstdint>
#include <string>
#include <string_view>

namespace cbr {

// FNV-1a 64-bit. Used for content addressing of stores, prompts and run
// cells; not collision-resistant against adversaries, which is fine here.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view data) {
        for (unsigned char c : data) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    uint64_t value() const { return state_; }
    std::string hex() const;

private:
    uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string digest_hex(std::string_view data) {
    return Fnv1a64().update(data).hex();
}

}  // namespace cbr
