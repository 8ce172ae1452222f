public class Renderer {
    public void paint() { }

    public Shape produce() {
        return null;
    }

    public void consume(Circle c) { }
}
