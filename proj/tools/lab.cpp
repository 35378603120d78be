#include "backlab/cli.hpp"

int main(int argc, char** argv) { return backlab::lab_main(argc, argv); }
