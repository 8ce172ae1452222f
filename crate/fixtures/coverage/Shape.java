public interface Shape {
    void draw();
    void resize(int factor);
}
