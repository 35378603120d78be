#pragma once

namespace backlab {

// Exit codes: 0 all pass, 1 acceptance failure, 2 configuration error, 3 runtime or IO error.
int lab_main(int argc, char** argv);

}  // namespace backlab
