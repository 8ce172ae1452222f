public enum Mode {
    ON, OFF
}
