#include "woodmon/service/record_log.hpp"

#include <iterator>
#include <stdexcept>
#include <string>

namespace woodmon::service {

RecordLog::RecordLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path())
        std::filesystem::create_directories(path_.parent_path());

    std::string text;
    if (std::ifstream in{path_, std::ios::binary})
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    const auto complete = text.rfind('\n');
    const std::size_t keep = complete == std::string::npos ? 0 : complete + 1;
    if (keep < text.size()) {
        loaded_.dropped_tail_bytes = text.size() - keep;
        std::filesystem::resize_file(path_, keep);
    }

    std::size_t pos = 0;
    while (pos < keep) {
        const auto nl = text.find('\n', pos);
        const std::string_view line(text.data() + pos, nl - pos);
        pos = nl + 1;
        if (line.empty())
            continue;
        auto parsed = json::Json::parse(line, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object())
            ++loaded_.unreadable_lines;
        else
            loaded_.records.push_back(std::move(parsed));
    }

    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_)
        throw std::runtime_error("cannot open record log " + path_.string());
}

void RecordLog::append(const json::Json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_)
        throw std::runtime_error("write to record log " + path_.string() + " failed");
}

}  // namespace woodmon::service
