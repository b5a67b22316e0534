#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mercury/error.hpp"
#include "mercury/index.hpp"

namespace mercury {

/// A search parameter that failed to parse. code() is "bad_<parameter>".
class ParamError : public ValidationError {
public:
    ParamError(std::string parameter, const std::string& what)
        : ValidationError(what), parameter_(std::move(parameter)) {}

    const std::string& parameter() const noexcept { return parameter_; }
    std::string code() const { return "bad_" + parameter_; }

private:
    std::string parameter_;
};

using SearchParams = std::vector<std::pair<std::string, std::string>>;

/// Parses q, bbox ("west,south,east,north"), start, end (RFC 3339 or
/// YYYY-MM-DD; a bare end date covers its whole day), provider, keyword, page
/// and size. Unknown parameters are ignored. Throws ParamError.
Query parse_search_params(const SearchParams& params);

/// The exact /api/search response body: compact JSON plus a newline.
std::string search_body(const Index& index, const Query& query);

} // namespace mercury
