public interface Target2 {
    void request();
}
