#pragma once

#include <stdexcept>
#include <string>

namespace west {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define WEST_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

WEST_DEFINE_ERROR(EmptyInput);
WEST_DEFINE_ERROR(DegenerateInput);
WEST_DEFINE_ERROR(DuplicateCenters);
WEST_DEFINE_ERROR(CenterOutsideBox);
WEST_DEFINE_ERROR(AllZero);
WEST_DEFINE_ERROR(NonPositiveSpeed);
WEST_DEFINE_ERROR(EmptyWindow);
WEST_DEFINE_ERROR(InvalidConfig);
WEST_DEFINE_ERROR(TooShort);
WEST_DEFINE_ERROR(EmptySplit);
WEST_DEFINE_ERROR(ShapeMismatch);
WEST_DEFINE_ERROR(NotScalar);
WEST_DEFINE_ERROR(StaleTape);
WEST_DEFINE_ERROR(CorruptCheckpoint);
WEST_DEFINE_ERROR(VersionMismatch);
WEST_DEFINE_ERROR(Diverged);
WEST_DEFINE_ERROR(MissingArtifact);

#undef WEST_DEFINE_ERROR

} // namespace west
