#include "slowfast/cli.hpp"

int main(int argc, char** argv) { return slowfast::cli_main(argc, argv); }
