public interface T {
    void request();
}
