public interface Drawing extends Shape {
    void render();
}
