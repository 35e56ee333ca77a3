//! Book chapters compiled as doc-tests.
