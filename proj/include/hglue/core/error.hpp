#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hglue {

/// Raised when an argument lies outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Identifies one Gaussian draw site on the (slice, replica, stage) lattice.
struct RngSite {
    std::uint32_t n = 0;
    std::uint32_t b = 0;
    std::uint32_t stage = 0;

    friend bool operator==(const RngSite&, const RngSite&) = default;
};

/// A kernel produced a non-finite drift or state.
class StepError : public std::runtime_error {
public:
    explicit StepError(const std::string& what, std::optional<RngSite> site = std::nullopt)
        : std::runtime_error(format(what, site)), site_(site) {}

    const std::optional<RngSite>& site() const noexcept { return site_; }

private:
    static std::string format(const std::string& what, const std::optional<RngSite>& site) {
        if (!site) return what;
        return what + " at site (n=" + std::to_string(site->n) + ", b=" + std::to_string(site->b) +
               ", stage=" + std::to_string(site->stage) + ")";
    }

    std::optional<RngSite> site_;
};

/// Configuration schema violation; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace hglue
