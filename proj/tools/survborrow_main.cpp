#include "survborrow/cli.hpp"

int main(int argc, char** argv) { return survborrow::cli_main(argc, argv); }
