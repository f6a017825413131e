#ifndef PLATED_ERROR_HPP
#define PLATED_ERROR_HPP

#include <stdexcept>
#include <string>

namespace plated {

// User-facing failure (bad file, bad shape, bad config). Everything the
// library throws on invalid input derives from this.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& message) {
    if (!cond) throw Error(message);
}

}  // namespace plated

#endif  // PLATED_ERROR_HPP
