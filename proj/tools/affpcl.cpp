#include "affpcl/cli.hpp"

int main(int argc, char** argv) { return affpcl::dispatch(argc, argv); }
